"""Closed-form SNR of a single-antenna link assisted by one RIS placed on the
AP-user segment, for passive and active surfaces.

The RIS sits at distance ``d`` from the AP and ``L - d`` from the user; the
vertical offset is neglected. Gains: A^g for the AP-RIS leg, A^f for the
RIS-user leg and A^h for the direct link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from risidd.channel import db_to_gain, path_loss_strong, path_loss_weak
from risidd.config import D_MIN, dbm_to_linear


@dataclass(frozen=True)
class SisoScenario:
    L: float = 400.0
    N: int = 64
    sigma_x2: float = 1.0  # mW
    sigma_n2: float = dbm_to_linear(-95.0)
    sigma_v2: float = dbm_to_linear(-95.0)
    p_ris_fraction: float = 0.1
    direct_model: str = "strong"  # path-loss model for A^h: "strong" or "weak"

    def __post_init__(self):
        if not self.L > 2 * D_MIN:
            raise ValueError(f"L must exceed {2 * D_MIN} m")
        if not (self.sigma_x2 > 0 and self.sigma_n2 > 0 and self.sigma_v2 >= 0):
            raise ValueError("sigma_x2 and sigma_n2 must be positive, sigma_v2 non-negative")
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if self.direct_model not in ("strong", "weak"):
            raise ValueError("direct_model must be 'strong' or 'weak'")


def passive_scenario(**kw) -> SisoScenario:
    """Operating point of the passive deployment study (6 dBm, -100 dBm noise)."""
    params = dict(sigma_x2=dbm_to_linear(6.0), sigma_n2=dbm_to_linear(-100.0), sigma_v2=0.0)
    params.update(kw)
    return SisoScenario(**params)


def active_scenario(**kw) -> SisoScenario:
    """Operating point of the active deployment study (0 dBm, -95 dBm noises)."""
    params = dict(sigma_x2=1.0, sigma_n2=dbm_to_linear(-95.0), sigma_v2=dbm_to_linear(-95.0))
    params.update(kw)
    return SisoScenario(**params)


def _check_domain(d, sc):
    d = np.asarray(d, dtype=float)
    if np.any(d < D_MIN) or np.any(d > sc.L - D_MIN):
        raise ValueError(f"d must lie in [{D_MIN}, {sc.L - D_MIN}] m")
    return d


def siso_gains(d, sc: SisoScenario):
    """Linear (A^h, A^g, A^f) for RIS position(s) d."""
    d = _check_domain(d, sc)
    pl_direct = path_loss_strong if sc.direct_model == "strong" else path_loss_weak
    Ah = db_to_gain(pl_direct(sc.L))
    Ag = db_to_gain(path_loss_strong(d))
    Af = db_to_gain(path_loss_strong(sc.L - d))
    return Ah, Ag, Af


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def passive_snr(d, sc: SisoScenario):
    """(A^h + A^g A^f N^2) sigma_x2 / sigma_n2, i.e. co-phased unit-modulus elements."""
    Ah, Ag, Af = siso_gains(d, sc)
    return _out((Ah + Ag * Af * sc.N**2) * sc.sigma_x2 / sc.sigma_n2)


def passive_optimal_d(sc: SisoScenario) -> tuple[float, float]:
    """The placement maximizing passive SNR: either end of the feasible segment."""
    return (D_MIN, sc.L - D_MIN)


def active_snr_from_gains(Ah, Ag, Af, sc: SisoScenario):
    """Active-RIS SNR with the RIS budget fully spent.

    The budget fixes |sum phi|^2 = f sigma_x2 / (A^f sigma_x2 + sigma_v2)
    with f the RIS power fraction; substituting gives
    (A^h + A^g A^f S) sigma_x2 / (S A^f sigma_v2 + sigma_n2).
    """
    sx, sn, sv = sc.sigma_x2, sc.sigma_n2, sc.sigma_v2
    S = sc.p_ris_fraction * sx / (Af * sx + sv)
    return _out((Ah + Ag * Af * S) * sx / (S * Af * sv + sn))


def active_snr(d, sc: SisoScenario):
    return active_snr_from_gains(*siso_gains(d, sc), sc)


def active_near_user_limit(Ah, sc: SisoScenario) -> float:
    """Limit of the active SNR as the RIS reaches the user (A^g -> A^h, A^f -> inf)."""
    f = sc.p_ris_fraction
    return float((1.0 + f) * Ah * sc.sigma_x2 / (f * sc.sigma_v2 + sc.sigma_n2))


def deployment_curve(mode: str, sc: SisoScenario, grid) -> list[tuple[float, float]]:
    fn = {"passive": passive_snr, "active": active_snr}[mode]
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    snr = np.atleast_1d(fn(grid, sc))
    return [(float(d), float(s)) for d, s in zip(grid, snr)]


def monotone_segments(curve) -> list[tuple[float, float, str]]:
    """Split a (d, value) curve into maximal increasing / decreasing / flat runs."""
    if len(curve) < 2:
        return []
    d = np.array([p[0] for p in curve])
    y = np.array([p[1] for p in curve])
    trend = np.sign(np.diff(y))
    names = {1.0: "increasing", -1.0: "decreasing", 0.0: "flat"}
    segs = []
    start = 0
    for i in range(1, len(trend) + 1):
        if i == len(trend) or trend[i] != trend[start]:
            segs.append((float(d[start]), float(d[i]), names[trend[start]]))
            start = i
    return segs
