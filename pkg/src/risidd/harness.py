"""Parameter sweeps, Monte Carlo aggregation and CSV output."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from risidd.channel import draw_channels
from risidd.config import SystemConfig, make_geometry, split_power
from risidd.detector import DetectorError
from risidd.idd import code_for, run_frame_stages
from risidd.ris_design import ReflectionDesignError, alternating_design

log = logging.getLogger(__name__)

VARIABLES = {
    "ris_distance": "ris_x",
    "power_per_user": "pt_per_user_dbm",
    "users": "K",
    "antennas": "M",
    "elements": "N",
}
SCHEMES = {
    "linear_passive": ("passive", False),
    "linear_active": ("active", False),
    "idd_passive": ("passive", True),
    "idd_active": ("active", True),
}
PROFILES = {
    "desk": dict(K=4, M=8, N=16, frames=200),
    "paper": dict(K=12, M=32, N=64, frames=200),
}
# operating points of the deployment / tuning studies
MODE_DEFAULTS = {
    "passive": dict(pt_per_user_dbm=6.0, sigma_s2_dbm=-100.0),
    "active": dict(pt_per_user_dbm=0.0, sigma_s2_dbm=-95.0, sigma_v2_dbm=-95.0),
}
FAIL_FRACTION = 0.01
CSV_HEADER = ["scheme", "tau", "variable", "value", "frames", "ber",
              "sum_rate_mean", "sum_rate_stderr", "seed", "config_hash"]
_NUMERICAL_FAILURES = (DetectorError, ReflectionDesignError, np.linalg.LinAlgError, FloatingPointError)


class SweepAborted(RuntimeError):
    pass


def profile_config(profile: str = "desk", scheme: str = "idd_passive", **overrides) -> SystemConfig:
    """Base configuration for a named profile and scheme; overrides win."""
    mode, _ = SCHEMES[scheme]
    params = {**PROFILES[profile], **MODE_DEFAULTS[mode], "ris_mode": mode}
    params.update({k: v for k, v in overrides.items() if v is not None})
    return SystemConfig(**params)


@dataclass
class SweepSpec:
    variable: str
    values: Sequence
    base_config: SystemConfig
    scheme: str = "idd_passive"
    tau_list: Sequence[int] = (1,)

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; choose from {list(VARIABLES)}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {list(SCHEMES)}")
        vals = list(self.values)
        if not vals:
            raise ValueError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if not SCHEMES[self.scheme][1]:
            self.tau_list = (0,)
        taus = sorted(set(int(t) for t in self.tau_list))
        if not taus or taus[0] < 0:
            raise ValueError("tau values must be non-negative")
        self.tau_list = tuple(taus)

    def point_config(self, value) -> SystemConfig:
        mode, _ = SCHEMES[self.scheme]
        key = VARIABLES[self.variable]
        if key in ("K", "M", "N"):
            value = int(value)
        return self.base_config.replace(**{key: value, "ris_mode": mode, "tau": max(self.tau_list)})


@dataclass
class ResultRow:
    scheme: str
    tau: int
    variable: str
    value: float
    frames: int
    ber: float
    sum_rate_mean: float
    sum_rate_stderr: float
    seed: int
    config_hash: str


@dataclass
class PointOutcome:
    """Per-trial outcomes of one sweep point, one column per tau."""

    config: SystemConfig
    value_index: int
    taus: tuple[int, ...]
    errors: np.ndarray  # (frames, len(taus))
    bits: np.ndarray  # (frames, len(taus))
    sum_rate: np.ndarray  # (frames, len(taus))
    failed: list[int] = field(default_factory=list)

    @property
    def frame_ber(self) -> np.ndarray:
        return self.errors / self.bits


def trial_seed(base: int, trial_index: int, value_index: int) -> int:
    """Per-trial seed from a counter-based derivation (SeedSequence spawn keys).

    Distinct (trial, value) pairs get distinct keys, so their generator
    streams are independent; the 128-bit output makes collisions negligible.
    """
    ss = np.random.SeedSequence(int(base), spawn_key=(int(value_index), int(trial_index)))
    words = ss.generate_state(4, np.uint32)
    return int(sum(int(w) << (32 * i) for i, w in enumerate(words)))


def run_trial(config: SystemConfig, seed: int, taus: Sequence[int]):
    """One Monte Carlo trial: users, channels, RIS design, coded frame.

    Returns (errors, bits, sum_rate) arrays indexed like ``taus``.
    """
    rng = np.random.default_rng(seed)
    geometry = make_geometry(config, rng)
    ch = draw_channels(config, geometry, rng)
    budget = split_power(config)
    refl, _ = alternating_design(ch, config, budget)
    stages = run_frame_stages(config, ch, refl, rng, max(taus), code_for(config))
    picked = [stages[t] for t in taus]
    return (np.array([int(s.bit_errors.sum()) for s in picked]),
            np.array([int(s.bits_total.sum()) for s in picked]),
            np.array([s.sum_rate for s in picked]))


def _guarded_trial(args):
    config, seed, taus = args
    try:
        return run_trial(config, seed, taus)
    except _NUMERICAL_FAILURES as exc:
        return exc


def run_point(config: SystemConfig, value_index: int, taus: Sequence[int], frames: int | None = None,
              workers: int = 1) -> PointOutcome:
    frames = config.frames if frames is None else frames
    taus = tuple(taus)
    jobs = [(config, trial_seed(config.seed, i, value_index), taus) for i in range(frames)]
    if workers > 1 and frames > 1:
        code_for(config)  # build once here so forked workers inherit the cache
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_guarded_trial, jobs, chunksize=max(1, frames // (4 * workers))))
    else:
        results = [_guarded_trial(j) for j in jobs]

    failed = [i for i, r in enumerate(results) if isinstance(r, Exception)]
    for i in failed:
        log.warning("trial %d (seed %d, config %s) failed: %s",
                    i, jobs[i][1], config.config_hash(), results[i])
    if frames and len(failed) > FAIL_FRACTION * frames:
        raise SweepAborted(f"{len(failed)}/{frames} trials failed for config {config.config_hash()}")
    good = [r for r in results if not isinstance(r, Exception)]
    shape = (len(good), len(taus))
    errors = np.array([r[0] for r in good]).reshape(shape)
    bits = np.array([r[1] for r in good]).reshape(shape)
    rates = np.array([r[2] for r in good]).reshape(shape)
    return PointOutcome(config, value_index, taus, errors, bits, rates, failed)


def aggregate(spec: SweepSpec, value, outcome: PointOutcome) -> list[ResultRow]:
    rows = []
    n = outcome.sum_rate.shape[0]
    for j, tau in enumerate(outcome.taus):
        bits = int(outcome.bits[:, j].sum())
        rates = outcome.sum_rate[:, j]
        stderr = float(rates.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append(ResultRow(
            scheme=spec.scheme,
            tau=tau,
            variable=spec.variable,
            value=value,
            frames=n,
            ber=float(outcome.errors[:, j].sum() / bits) if bits else float("nan"),
            sum_rate_mean=float(rates.mean()) if n else float("nan"),
            sum_rate_stderr=stderr,
            seed=outcome.config.seed,
            config_hash=outcome.config.config_hash(),
        ))
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1, outcomes: list | None = None) -> list[ResultRow]:
    """Run every (value, tau) point of the sweep.

    All requested IDD depths of a point come from the same trials, since a
    depth-t run is a prefix of a deeper one. Rows are ordered by value, then
    tau. If ``outcomes`` is a list, per-point trial data is appended to it.
    """
    rows = []
    for vi, value in enumerate(spec.values):
        config = spec.point_config(value)
        outcome = run_point(config, vi, spec.tau_list, workers=workers)
        if outcomes is not None:
            outcomes.append(outcome)
        rows.extend(aggregate(spec, value, outcome))
    return rows


def reproduce_row(row: ResultRow, metadata: dict, workers: int = 1) -> ResultRow:
    """Regenerate a row from the sidecar entry stored under its config hash."""
    point = metadata["points"][row.config_hash]
    config = SystemConfig.from_dict(point["config"])
    if config.seed != row.seed:
        raise ValueError("row seed does not match the stored configuration")
    spec = SweepSpec(metadata["variable"], [point["value"]], config, metadata["scheme"], (row.tau,))
    outcome = run_point(config, point["value_index"], (row.tau,), workers=workers)
    return aggregate(spec, point["value"], outcome)[0]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_csv(rows: Sequence[ResultRow], path: str | Path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_csv(path: str | Path) -> list[ResultRow]:
    types = {f.name: f.type for f in fields(ResultRow)}
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for k, text in rec.items():
                if types[k] in ("str", str):
                    kw[k] = text
                elif types[k] in ("int", int):
                    kw[k] = int(text)
                elif k == "value":
                    kw[k] = _parse_number(text)
                else:
                    kw[k] = float(text)
            rows.append(ResultRow(**kw))
    return rows


def sweep_metadata(spec: SweepSpec, outcomes: Sequence[PointOutcome]) -> dict:
    from risidd import __version__

    return {
        "package_version": __version__,
        "variable": spec.variable,
        "values": list(spec.values),
        "scheme": spec.scheme,
        "tau_list": list(spec.tau_list),
        "base_config": spec.base_config.to_dict(),
        "points": {
            o.config.config_hash(): {
                "config": o.config.to_dict(),
                "value": spec.values[o.value_index],
                "value_index": o.value_index,
                "failed_trials": o.failed,
            }
            for o in outcomes
        },
    }


def write_metadata(meta: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")
