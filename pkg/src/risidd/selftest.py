"""Fast oracle checks runnable from an installed package (``risidd selftest``)."""

from __future__ import annotations

import itertools
import time

import numpy as np

from risidd import deployment
from risidd.channel import ChannelSet, cascade_matrices, effective_channel, path_loss_strong
from risidd.config import dbm_to_linear
from risidd.detector import filter_bank, gaussian_params, mmse_filter
from risidd.ldpc import construct_code, decode, has_four_cycle
from risidd.ris_design import (
    reflection_objective,
    ris_power,
    solve_reflection,
    truncate_active,
    truncate_passive,
)


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def check_units():
    return abs(dbm_to_linear(6.0) - 3.98107) < 1e-5 and abs(path_loss_strong(400.0) + 94.5453) < 1e-4


def check_cascade_identity():
    rng = np.random.default_rng(1)
    M, K, N = 5, 3, 7
    ch = ChannelSet(_crandn(rng, M, K), _crandn(rng, M, N), _crandn(rng, N, K))
    phi = _crandn(rng, N)
    A = cascade_matrices(ch).A
    alt = ch.H_direct + np.stack([A[k] @ phi for k in range(K)], axis=1)
    return np.max(np.abs(alt - effective_channel(ch, phi))) < 1e-12


def check_mmse_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        M, K = 6, 3
        H = _crandn(rng, M, K)
        v = rng.uniform(0, 1, K)
        C = 0.1 * np.eye(M)
        _, mu, eta2, _ = filter_bank(H, v, C, 1.0)
        for k in range(K):
            w = mmse_filter(H, k, v, C, 1.0)
            _, e2 = gaussian_params(w, k, H, v, C, 1.0)
            worst = max(worst, abs(e2 - eta2[k]) / eta2[k], abs(e2 - mu[k] * (1 - mu[k])) / e2)
    return worst < 1e-9


def check_reflection():
    rng = np.random.default_rng(3)
    K, M, N = 2, 2, 2
    W = _crandn(rng, K, M)
    A = _crandn(rng, K, M, N)
    base = _crandn(rng, M, K)
    G = _crandn(rng, M, N)
    phi = solve_reflection(W, A, base, G, 0.3, 1.0)
    f0 = reflection_objective(phi, W, A, base, G, 0.3, 1.0)
    probes = [reflection_objective(phi + 1e-3 * _crandn(rng, N), W, A, base, G, 0.3, 1.0) for _ in range(50)]
    return min(probes) >= f0


def check_truncations():
    rng = np.random.default_rng(4)
    phi = _crandn(rng, 32)
    F = _crandn(rng, 32, 4)
    act = truncate_active(phi, F, 2.0, 0.5, 7.0)
    pas = truncate_passive(phi)
    return (abs(ris_power(act.phi, F, 2.0, 0.5) - 7.0) / 7.0 < 1e-9
            and np.max(np.abs(np.abs(pas.phi) - 1)) < 1e-12)


def check_ldpc_toy_map():
    pc = construct_code(16, 0.5, 0, col_weight=2)
    if has_four_cycle(pc.H):
        return False
    words = np.array([c for c in itertools.product((0, 1), repeat=16)
                      if not np.any(pc.syndrome(np.array(c)))])
    rng = np.random.default_rng(5)
    agree = 0
    for _ in range(100):
        llr = 2 * (1 + 0.5 * rng.standard_normal(16)) / 0.25
        metric = (1 - 2 * words) @ llr / 2
        p = np.exp(metric - metric.max())
        p1 = p @ words / p.sum()
        map_bits = (p1 > 0.5).astype(np.uint8)
        agree += np.array_equal(decode(pc, llr, 50).hard_bits, map_bits)
    return agree >= 99


def check_siso():
    sc = deployment.passive_scenario()
    grid = np.arange(1.0, 400.0)
    snr = deployment.passive_snr(grid, sc)
    sca = deployment.active_scenario()
    Ah = 1e-9
    lim = deployment.active_near_user_limit(Ah, sca)
    val = deployment.active_snr_from_gains(Ah, Ah, 1e12, sca)
    return (snr[0] == snr.max() == snr[-1] and grid[np.argmin(snr)] == 200.0
            and abs(val - lim) / lim < 1e-6)


CHECKS = [
    ("unit conversion and path loss", check_units),
    ("effective channel: direct+G diag(phi) f == h+A phi", check_cascade_identity),
    ("MMSE residual variance identity", check_mmse_identity),
    ("reflection solve is a local minimum", check_reflection),
    ("passive/active truncation constraints", check_truncations),
    ("toy LDPC decoder vs exhaustive MAP", check_ldpc_toy_map),
    ("SISO placement analytics", check_siso),
]


def run_selftest(verbose: bool = True) -> bool:
    ok_all = True
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok = bool(fn())
        except Exception as exc:  # report and keep going
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        ok_all &= ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}  ({time.perf_counter() - t0:.2f}s)")
    return ok_all
