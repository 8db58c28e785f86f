"""Linear and soft-interference-cancellation MMSE receivers.

Gray QPSK mapping: bit pair (b1, b2) -> sqrt(sigma_x2/2) * ((1-2*b1) + 1j*(1-2*b2)).
Bit LLRs are interleaved per symbol as [Re, Im, Re, Im, ...].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from risidd.ldpc import LLR_CLIP


class DetectorError(FloatingPointError):
    pass


@dataclass
class SoftState:
    x_tilde: np.ndarray  # (K, S) soft symbols
    v: np.ndarray  # (K, S) residual variances
    Lc: np.ndarray | None = None  # (K, n) decoder extrinsic, fed to the detector
    Ld: np.ndarray | None = None  # (K, n) detector extrinsic, fed to the decoder


@dataclass
class DetectionOutput:
    x_hat: np.ndarray  # (K, S)
    mu: np.ndarray  # (K,)
    eta2: np.ndarray  # (K,)
    sinr: np.ndarray  # (K,)
    W: np.ndarray  # (K, M), row k is w_k^H


def qpsk_modulate(bits, sigma_x2: float) -> np.ndarray:
    """Map (..., 2S) bits to (..., S) symbols."""
    b = np.asarray(bits, dtype=float)
    re = 1.0 - 2.0 * b[..., 0::2]
    im = 1.0 - 2.0 * b[..., 1::2]
    return np.sqrt(sigma_x2 / 2.0) * (re + 1j * im)


def soft_symbols(Lc, sigma_x2: float):
    """Soft symbol mean and residual variance from interleaved bit LLRs."""
    L = np.clip(np.asarray(Lc, dtype=float), -LLR_CLIP, LLR_CLIP)
    x_tilde = np.sqrt(sigma_x2 / 2.0) * (np.tanh(L[..., 0::2] / 2.0) + 1j * np.tanh(L[..., 1::2] / 2.0))
    v = np.clip(sigma_x2 - np.abs(x_tilde) ** 2, 0.0, sigma_x2)
    return x_tilde, v


def sic_cancel(y, Heff, x_tilde, k: int) -> np.ndarray:
    """Remove every user's soft estimate except user k's: y - Heff x~ + h_k x~_k.

    ``y`` may be a single M-vector or an (M, S) block with ``x_tilde`` (K, S).
    """
    Heff = np.asarray(Heff)
    x = np.array(x_tilde, dtype=complex, copy=True)
    x[k] = 0.0
    return np.asarray(y) - Heff @ x


def noise_covariance(G, phi, sigma_v2: float, sigma_s2: float) -> np.ndarray:
    M = G.shape[0]
    C = sigma_s2 * np.eye(M, dtype=complex)
    if sigma_v2 > 0:
        GP = G * np.asarray(phi)[None, :]
        C = C + sigma_v2 * (GP @ GP.conj().T)
    return C


def _own_variance(v, k, sigma_x2):
    Vk = np.array(v, dtype=float, copy=True)
    Vk[k] = sigma_x2
    return Vk


def mmse_filter(Heff, k: int, v, noise_cov, sigma_x2: float) -> np.ndarray:
    """w_k = sigma_x2 (Heff V_k Heff^H + noise_cov)^-1 h_k, V_k = diag(v) with v_k -> sigma_x2."""
    Vk = _own_variance(v, k, sigma_x2)
    C = (Heff * Vk[None, :]) @ Heff.conj().T + noise_cov
    try:
        return sigma_x2 * np.linalg.solve(C, Heff[:, k])
    except np.linalg.LinAlgError as exc:
        raise DetectorError(f"singular receive covariance (cond={np.linalg.cond(C):.3g})") from exc


def gaussian_params(w_k, k: int, Heff, v, noise_cov, sigma_x2: float):
    """Amplitude and residual variance of x_hat = mu x + z (covariance path).

    eta^2 = w^H C_k w - mu^2 sigma_x2, with C_k the received covariance when
    user k's own variance is sigma_x2. Splitting C_k = R_k + sigma_x2 h_k h_k^H
    (R_k: interference plus noise) gives the same quantity without the
    cancellation: eta^2 = w^H R_k w + sigma_x2 Im(w^H h_k)^2.
    """
    hk = Heff[:, k]
    Vk = np.array(v, dtype=float, copy=True)
    Vk[k] = 0.0
    R = (Heff * Vk[None, :]) @ Heff.conj().T + noise_cov
    g = np.vdot(w_k, hk)
    mu = float(g.real)
    eta2 = float(np.real(np.vdot(w_k, R @ w_k))) + sigma_x2 * float(g.imag) ** 2
    if not eta2 > 0:
        raise DetectorError(f"non-positive residual variance {eta2:g} for user {k}")
    return mu, eta2


def filter_bank(Heff, v, noise_cov, sigma_x2: float):
    """Soft-SIC MMSE filters for all users at once.

    Works from the interference-plus-noise covariance of each user, which
    keeps 1 - mu well conditioned at high SNR: with s_k = sigma_x2 h_k^H
    R_k^-1 h_k, mu_k = s_k/(1+s_k) and eta_k^2 = sigma_x2 s_k/(1+s_k)^2.

    Returns (W, mu, eta2, sinr) where row k of W is w_k^H.
    """
    M, K = Heff.shape
    v = np.asarray(v, dtype=float)
    W = np.empty((K, M), dtype=complex)
    sinr = np.empty(K)
    HV = Heff * v[None, :]
    base = HV @ Heff.conj().T + noise_cov
    for k in range(K):
        hk = Heff[:, k]
        R = base - v[k] * np.outer(hk, hk.conj())
        try:
            u = np.linalg.solve(R, hk)
        except np.linalg.LinAlgError as exc:
            raise DetectorError(f"singular interference covariance for user {k}") from exc
        s = sigma_x2 * float(np.real(np.vdot(hk, u)))
        sinr[k] = s
        W[k] = (sigma_x2 * u / (1.0 + s)).conj()
    mu = sinr / (1.0 + sinr)
    eta2 = sigma_x2 * sinr / (1.0 + sinr) ** 2
    if np.any(~np.isfinite(sinr)) or np.any(eta2 <= 0):
        raise DetectorError(f"degenerate filter output: sinr={sinr}")
    return W, mu, eta2, sinr


def extrinsic_llr(x_hat, mu, eta2, sigma_x2: float) -> np.ndarray:
    """Bit LLRs under x_hat = mu x + z, z ~ CN(0, eta2); (K, S) -> (K, 2S).

    The soft-SIC estimate never uses user k's own prior, so these LLRs are
    extrinsic as computed; nothing is subtracted.
    """
    x_hat = np.atleast_2d(x_hat)
    mu = np.asarray(mu, dtype=float).reshape(-1, 1)
    eta2 = np.asarray(eta2, dtype=float).reshape(-1, 1)
    scale = 2.0 * np.sqrt(2.0 * sigma_x2) * mu / eta2
    out = np.empty((x_hat.shape[0], 2 * x_hat.shape[1]))
    out[:, 0::2] = scale * x_hat.real
    out[:, 1::2] = scale * x_hat.imag
    return np.clip(out, -LLR_CLIP, LLR_CLIP)


def detect(Y, Heff, x_tilde, v, noise_cov, sigma_x2: float) -> DetectionOutput:
    """One detector pass over a block of S symbol slots.

    Filters use each user's residual variance averaged over the block, so
    there is one filter per user per pass. ``x_tilde``/``v`` are (K, S).
    """
    v_bar = np.asarray(v, dtype=float).mean(axis=1)
    W, mu, eta2, sinr = filter_bank(Heff, v_bar, noise_cov, sigma_x2)
    # w_k^H (Y - Heff x~ + h_k x~_k), vectorized over users and slots
    resid = Y - Heff @ x_tilde
    x_hat = W @ resid + np.einsum("km,mk->k", W, Heff)[:, None] * x_tilde
    return DetectionOutput(x_hat=x_hat, mu=mu, eta2=eta2, sinr=sinr, W=W)


def sinr_linear(w_k, k: int, Heff, G, phi, sigma_x2: float, sigma_v2: float, sigma_s2: float) -> float:
    """SINR of a linear receiver w_k without interference cancellation."""
    g = np.conj(w_k) @ Heff
    signal = np.abs(g[k]) ** 2 * sigma_x2
    interference = (np.sum(np.abs(g) ** 2) - np.abs(g[k]) ** 2) * sigma_x2
    ris_noise = 0.0
    if sigma_v2 > 0:
        ris_noise = np.sum(np.abs(np.conj(w_k) @ (G * np.asarray(phi)[None, :])) ** 2) * sigma_v2
    noise = np.real(np.vdot(w_k, w_k)) * sigma_s2
    return float(signal / (interference + ris_noise + noise))


def sum_rate(sinr) -> float:
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR must be non-negative")
    return float(np.sum(np.log2(1.0 + sinr)))
