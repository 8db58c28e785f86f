"""Command line entry point: ``risidd sweep | deploy-analytic | selftest``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from risidd import deployment, harness
from risidd.config import D_MIN, ConfigError, SystemConfig, dbm_to_linear, load_config
from risidd.ldpc import CodeConstructionError

# flags handled explicitly by the sweep subcommand
_EXPLICIT = {"tau", "frames", "seed"}


def _parse_list(text: str, kind=float):
    return [kind(x) for x in text.replace(",", " ").split()]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("config overrides (same names as the config file keys)")
    for f in dataclasses.fields(SystemConfig):
        if f.name in _EXPLICIT:
            continue
        kind = {"int": int, "float": float, "str": str}[f.type]
        g.add_argument(f"--{f.name}", type=kind, default=None, metavar=f.name.upper())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risidd", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sw = sub.add_parser(
        "sweep",
        help="Monte Carlo sweep of one parameter, written as CSV",
        description=(
            "Run one scheme over a list of parameter values. Per-user power is "
            "divided by the code rate (sigma_x^2 = P_user / R), i.e. --pt_per_user_dbm "
            "is energy per information bit. Writes OUT and OUT.meta.json."
        ),
    )
    sw.add_argument("--variable", required=True, choices=list(harness.VARIABLES))
    sw.add_argument("--values", required=True, help="comma separated, strictly increasing")
    sw.add_argument("--scheme", default="idd_passive", choices=list(harness.SCHEMES))
    sw.add_argument("--tau", default="1", help="IDD depths, comma separated (ignored by linear schemes)")
    sw.add_argument("--frames", type=int, default=None)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--out", required=True, type=Path)
    sw.add_argument("--profile", choices=list(harness.PROFILES), default="desk")
    sw.add_argument("--config", type=Path, default=None, help="YAML key: value config file")
    sw.add_argument("--workers", type=int, default=1)
    _add_config_flags(sw)

    da = sub.add_parser("deploy-analytic", help="closed-form SISO SNR versus RIS position, as CSV")
    da.add_argument("--mode", choices=["passive", "active"], required=True)
    da.add_argument("--L", type=float, default=400.0)
    da.add_argument("--N", type=int, default=64)
    da.add_argument("--step", type=float, default=1.0, help="grid spacing in m")
    da.add_argument("--sigma_x2_dbm", type=float, default=None)
    da.add_argument("--sigma_n2_dbm", type=float, default=None)
    da.add_argument("--sigma_v2_dbm", type=float, default=None)
    da.add_argument("--direct_model", choices=["strong", "weak"], default="strong")
    da.add_argument("--out", type=Path, default=None, help="CSV path (stdout if omitted)")

    sub.add_parser("selftest", help="run the built-in oracle checks")
    return ap


def _sweep(args) -> int:
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(SystemConfig)
                 if f.name not in _EXPLICIT and getattr(args, f.name, None) is not None}
    overrides.update(frames=args.frames, seed=args.seed)
    base = harness.profile_config(args.profile, args.scheme)
    if args.config is not None:
        file_cfg = load_config(args.config)
        # a config file replaces the profile; flags still win
        base = file_cfg.replace(ris_mode=harness.SCHEMES[args.scheme][0])
    base = base.replace(**{k: v for k, v in overrides.items() if v is not None})
    kind = int if harness.VARIABLES[args.variable] in ("K", "M", "N") else float
    spec = harness.SweepSpec(args.variable, _parse_list(args.values, kind), base,
                             args.scheme, _parse_list(args.tau, int))
    outcomes: list = []
    rows = harness.run_sweep(spec, workers=args.workers, outcomes=outcomes)
    harness.emit_csv(rows, args.out)
    harness.write_metadata(harness.sweep_metadata(spec, outcomes), str(args.out) + ".meta.json")
    for r in rows:
        print(f"{r.scheme} tau={r.tau} {r.variable}={r.value}: ber={r.ber:.4g} "
              f"sum_rate={r.sum_rate_mean:.4f}+-{r.sum_rate_stderr:.4f}")
    return 0


def _deploy(args) -> int:
    factory = deployment.passive_scenario if args.mode == "passive" else deployment.active_scenario
    kw = dict(L=args.L, N=args.N, direct_model=args.direct_model)
    for name in ("sigma_x2", "sigma_n2", "sigma_v2"):
        val = getattr(args, f"{name}_dbm")
        if val is not None:
            kw[name] = dbm_to_linear(val)
    sc = factory(**kw)
    grid = np.arange(D_MIN, sc.L - D_MIN + 1e-9, args.step)
    curve = deployment.deployment_curve(args.mode, sc, grid)
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d", "snr_db"])
        for d, snr in curve:
            w.writerow([repr(d), repr(float(10 * np.log10(snr)))])
    finally:
        if args.out:
            fh.close()
    if args.out:
        for seg in deployment.monotone_segments(curve):
            print(f"{seg[2]} from {seg[0]:g} m to {seg[1]:g} m")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sweep":
            return _sweep(args)
        if args.command == "deploy-analytic":
            return _deploy(args)
        from risidd.selftest import run_selftest

        return 0 if run_selftest() else 1
    except (ConfigError, ValueError, OSError, CodeConstructionError, harness.SweepAborted) as exc:
        print(f"risidd: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
