"""MMSE design of the RIS reflection coefficients, with passive (unit-modulus)
and active (power-rescaled) truncation, alternated with the receive filters."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from risidd.channel import ChannelSet, cascade_matrices, effective_channel
from risidd.detector import filter_bank, noise_covariance

log = logging.getLogger(__name__)

# above this the normal matrix is treated as rank deficient and the
# minimum-norm least-squares solution is used instead of a direct solve
COND_LIMIT = 1e12


class ReflectionDesignError(ArithmeticError):
    pass


@dataclass
class ReflectionState:
    phi: np.ndarray
    mode: str = "passive"
    objective_trace: list[float] = field(default_factory=list)
    below_unit_gain: int = 0  # active entries with |phi_n| < 1 (p_n >= 1 is not enforced)

    @property
    def N(self) -> int:
        return self.phi.size


def normal_equations(W, A, base, G, sigma_v2: float, sigma_x2: float):
    """Assemble (beta + (sigma_v2/sigma_x2) (WG)^H WG, Psi)."""
    K = W.shape[0]
    WA = np.einsum("km,imn->ikn", W, A)  # (K users i, K rows, N)
    beta = np.einsum("ikn,ikp->np", WA.conj(), WA)
    E = np.eye(K)
    resid = E - W @ base  # column i is e_i - W b_i
    psi = np.einsum("ikn,ki->n", WA.conj(), resid)
    lhs = beta
    if sigma_v2 > 0:
        WG = W @ G
        lhs = beta + (sigma_v2 / sigma_x2) * (WG.conj().T @ WG)
    return lhs, psi


def reflection_objective(phi, W, A, base, G, sigma_v2: float, sigma_x2: float) -> float:
    """sum_i ||e_i - W b_i - W A_i phi||^2 + (sigma_v2/sigma_x2) ||W G phi||^2."""
    phi = np.asarray(phi)
    K = W.shape[0]
    eff = base + np.einsum("imn,n->mi", A, phi)
    val = np.sum(np.abs(np.eye(K) - W @ eff) ** 2)
    if sigma_v2 > 0:
        val += (sigma_v2 / sigma_x2) * np.sum(np.abs(W @ G @ phi) ** 2)
    return float(val)


def solve_reflection(W, cascades, effective, G, sigma_v2: float, sigma_x2: float) -> np.ndarray:
    """Unconstrained minimizer of the quadratic MMSE criterion in phi.

    ``effective`` holds the per-user channel that does not pass through the
    surface (the direct links when called from :func:`alternating_design`).
    Rank-deficient systems (passive RIS with N > K^2) get the minimum-norm
    least-squares solution.
    """
    A = getattr(cascades, "A", cascades)
    lhs, psi = normal_equations(W, A, effective, G, sigma_v2, sigma_x2)
    if not np.any(lhs):
        return np.zeros_like(psi)
    cond = np.linalg.cond(lhs)
    if np.isfinite(cond) and cond < COND_LIMIT:
        phi = np.linalg.solve(lhs, psi)
    else:
        log.debug("reflection normal matrix rank deficient (cond=%.3g); using lstsq", cond)
        phi = np.linalg.lstsq(lhs, psi, rcond=None)[0]
    if not np.all(np.isfinite(phi)):
        raise ReflectionDesignError(f"reflection solve produced non-finite values (cond={cond:.3g})")
    return phi


def truncate_passive(phi_o) -> ReflectionState:
    phi_o = np.asarray(phi_o, dtype=complex)
    mag = np.abs(phi_o)
    out = np.ones_like(phi_o)
    nz = mag > 0
    out[nz] = phi_o[nz] / mag[nz]
    return ReflectionState(out, "passive")


def ris_power(phi, F, sigma_x2: float, sigma_v2: float) -> float:
    """sum_i ||diag(phi) f_i||^2 sigma_x2 + ||phi||^2 sigma_v2."""
    p2 = np.abs(np.asarray(phi)) ** 2
    return float(sigma_x2 * np.sum(p2[:, None] * np.abs(F) ** 2) + sigma_v2 * np.sum(p2))


def truncate_active(phi_o, F, sigma_x2: float, sigma_v2: float, p_ris: float) -> ReflectionState:
    phi_o = np.asarray(phi_o, dtype=complex)
    power = ris_power(phi_o, F, sigma_x2, sigma_v2)
    if not power > 0:
        raise ReflectionDesignError("degenerate active design: zero reflection vector")
    phi = phi_o * np.sqrt(p_ris / power)
    return ReflectionState(phi, "active", below_unit_gain=int(np.sum(np.abs(phi) < 1.0)))


def mse_objective(W, Heff, G, phi, sigma_x2: float, sigma_v2: float, sigma_s2: float) -> float:
    """Total normalized MSE of the linear receiver W for the current surface."""
    K = W.shape[0]
    val = np.sum(np.abs(np.eye(K) - W @ Heff) ** 2) + (sigma_s2 / sigma_x2) * np.sum(np.abs(W) ** 2)
    if sigma_v2 > 0:
        val += (sigma_v2 / sigma_x2) * np.sum(np.abs(W @ (G * phi[None, :])) ** 2)
    return float(val)


def _truncate(phi_o, ch, config, budget) -> ReflectionState:
    if config.active:
        return truncate_active(phi_o, ch.F, budget.sigma_x2, config.sigma_v2, budget.p_ris)
    return truncate_passive(phi_o)


def _linear_filters(ch, phi, config, budget):
    Heff = effective_channel(ch, phi)
    ncov = noise_covariance(ch.G, phi, config.sigma_v2, config.sigma_s2)
    v = np.full(config.K, budget.sigma_x2)
    W = filter_bank(Heff, v, ncov, budget.sigma_x2)[0]
    return W, Heff


def alternating_design(ch: ChannelSet, config, budget):
    """Alternate MMSE filters and reflection design for ``config.n_alt`` rounds.

    A round's truncated surface replaces the current one only if it does not
    raise the total MSE. Returns the final ReflectionState and the matching
    filter bank (rows w_k^H); the MSE after initialization and after every
    round is stored in ``objective_trace``.
    """
    N = config.N
    ones = np.ones(N, dtype=complex)
    if config.active:
        state = truncate_active(ones, ch.F, budget.sigma_x2, config.sigma_v2, budget.p_ris)
    else:
        state = ReflectionState(ones, "passive")
    cas = cascade_matrices(ch)
    sx2, sv2, ss2 = budget.sigma_x2, config.sigma_v2, config.sigma_s2

    W, Heff = _linear_filters(ch, state.phi, config, budget)
    trace = [mse_objective(W, Heff, ch.G, state.phi, sx2, sv2, ss2)]
    for r in range(config.n_alt):
        phi_o = solve_reflection(W, cas, ch.H_direct, ch.G, sv2, sx2)
        cand = _truncate(phi_o, ch, config, budget)
        W_c, Heff_c = _linear_filters(ch, cand.phi, config, budget)
        mse = mse_objective(W_c, Heff_c, ch.G, cand.phi, sx2, sv2, ss2)
        # truncation can undo the gain of the relaxed solve; keep the better surface
        if mse > trace[-1]:
            # W is unchanged, so every later round would propose the same candidate
            trace.extend([trace[-1]] * (config.n_alt - r))
            break
        state, W = cand, W_c
        trace.append(mse)
    state.objective_trace = trace
    return state, W
