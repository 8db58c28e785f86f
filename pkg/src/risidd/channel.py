"""Large-scale (log-distance) and small-scale (Rayleigh) channel synthesis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from risidd.config import D_MIN, Geometry


def _check_distance(d):
    d = np.asarray(d, dtype=float)
    if np.any(d < D_MIN) or not np.all(np.isfinite(d)):
        raise ValueError(f"path-loss distance must be >= {D_MIN} m, got {d}")
    return d


def path_loss_strong(d):
    """Gain in dB, -(37.3 + 22.0 log10 d); used for the AP-RIS and RIS-user legs."""
    d = _check_distance(d)
    out = -(37.3 + 22.0 * np.log10(d))
    return float(out) if out.ndim == 0 else out


def path_loss_weak(d):
    """Gain in dB, -(41.2 + 28.7 log10 d); used for the obstructed AP-user link."""
    d = _check_distance(d)
    out = -(41.2 + 28.7 * np.log10(d))
    return float(out) if out.ndim == 0 else out


def db_to_gain(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class ChannelSet:
    H_direct: np.ndarray  # (M, K), columns h_k
    G: np.ndarray  # (M, N)
    F: np.ndarray  # (N, K), columns f_k

    @property
    def shape(self) -> tuple[int, int, int]:
        M, K = self.H_direct.shape
        return M, K, self.G.shape[1]


@dataclass(frozen=True)
class CascadeSet:
    A: np.ndarray  # (K, M, N) stack of A_k = G diag(f_k)
    effective: np.ndarray | None = None  # (M, K) for a given phi, if supplied


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_channels(config, geometry: Geometry, rng: np.random.Generator) -> ChannelSet:
    """Rayleigh entries scaled by the square root of each link's linear path gain.

    Draw order (direct, AP-RIS, RIS-user) is fixed so a seed pins the channel.
    """
    K, M, N = config.K, config.M, config.N
    g_direct = db_to_gain(path_loss_weak(geometry.ap_user_distances()))  # (K,)
    g_apris = float(db_to_gain(path_loss_strong(geometry.ap_ris_distance())))
    g_risuser = db_to_gain(path_loss_strong(geometry.ris_user_distances()))  # (K,)

    H = _crandn(rng, (M, K)) * np.sqrt(g_direct)[None, :]
    G = _crandn(rng, (M, N)) * np.sqrt(g_apris)
    F = _crandn(rng, (N, K)) * np.sqrt(g_risuser)[None, :]
    return ChannelSet(H_direct=H, G=G, F=F)


def cascade_matrices(ch: ChannelSet) -> CascadeSet:
    # A_k[:, j] = G[:, j] * f_k[j]
    A = ch.G[None, :, :] * ch.F.T[:, None, :]
    return CascadeSet(A=A)


def effective_channel(ch: ChannelSet, phi) -> np.ndarray:
    """Columns h_k + G diag(phi) f_k, returned as an (M, K) matrix."""
    phi = np.asarray(getattr(phi, "phi", phi))
    M, K, N = ch.shape
    if phi.shape != (N,) or ch.G.shape[0] != M or ch.F.shape != (N, K):
        raise ValueError(
            f"dimension mismatch: H {ch.H_direct.shape}, G {ch.G.shape}, "
            f"F {ch.F.shape}, phi {phi.shape}"
        )
    return ch.H_direct + ch.G @ (phi[:, None] * ch.F)
