"""Scenario parameters, power bookkeeping and node placement."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

D_MIN = 1.0  # m, reference distance of the log-distance path-loss models

RIS_MODES = ("passive", "active")


class ConfigError(ValueError):
    pass


def dbm_to_linear(p):
    """Convert power in dBm to mW. Works elementwise on arrays."""
    out = 10.0 ** (np.asarray(p, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_dbm(p):
    return 10.0 * np.log10(p)


@dataclass(frozen=True)
class SystemConfig:
    K: int = 4
    M: int = 8
    N: int = 16
    ris_mode: str = "passive"
    sigma_s2_dbm: float = -100.0
    sigma_v2_dbm: float = -95.0
    pt_per_user_dbm: float = 6.0
    tau: int = 0
    ldpc_n: int = 512
    ldpc_rate: float = 0.5
    frames: int = 200
    seed: int = 0
    n_alt: int = 3
    # decoder / code construction
    ldpc_seed: int = 0
    max_inner: int = 10
    # geometry (m)
    ris_x: float = 0.0
    ris_y: float = 10.0
    user_x: float = 400.0
    user_y: float = 0.0
    user_radius: float = 5.0

    def __post_init__(self):
        for name in ("K", "M", "N", "tau", "ldpc_n", "frames", "n_alt", "max_inner"):
            val = getattr(self, name)
            if isinstance(val, bool) or int(val) != val:
                raise ConfigError(f"{name} must be an integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        if self.K < 1 or self.M < 1 or self.N < 1:
            raise ConfigError("K, M and N must be positive")
        if self.K > self.M:
            raise ConfigError(f"need K <= M, got K={self.K}, M={self.M}")
        if self.ris_mode not in RIS_MODES:
            raise ConfigError(f"ris_mode must be one of {RIS_MODES}, got {self.ris_mode!r}")
        if self.tau < 0 or self.n_alt < 0 or self.frames < 0 or self.max_inner < 1:
            raise ConfigError("tau, n_alt and frames must be >= 0 and max_inner >= 1")
        for name in ("sigma_s2_dbm", "sigma_v2_dbm", "pt_per_user_dbm", "ldpc_rate",
                     "ris_x", "ris_y", "user_x", "user_y", "user_radius"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.ldpc_n % 2:
            raise ConfigError("ldpc_n must be even (two code bits per QPSK symbol)")
        if not 0.0 < self.ldpc_rate < 1.0:
            raise ConfigError("ldpc_rate must lie in (0, 1)")
        if self.user_radius < 0:
            raise ConfigError("user_radius must be non-negative")

    @property
    def sigma_s2(self) -> float:
        return dbm_to_linear(self.sigma_s2_dbm)

    @property
    def sigma_v2(self) -> float:
        """Dynamic RIS noise power; always zero for a passive surface."""
        if self.ris_mode == "passive":
            return 0.0
        return dbm_to_linear(self.sigma_v2_dbm)

    @property
    def active(self) -> bool:
        return self.ris_mode == "active"

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(data))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str | Path, **overrides) -> SystemConfig:
    """Read a YAML key-value config file; keyword overrides win over the file."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of key: value pairs")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return SystemConfig.from_dict(data)


def dump_config(config: SystemConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)


@dataclass(frozen=True)
class PowerBudget:
    """Per-user transmit power and RIS amplification budget, in mW.

    ``p_user`` is the power before code-rate normalization; ``sigma_x2`` is
    the symbol energy actually used on the channel (``p_user / rate``).
    """

    p_user: float
    p_ris: float
    sigma_x2: float
    p_total: float


def split_power(config: SystemConfig) -> PowerBudget:
    p_total = config.K * dbm_to_linear(config.pt_per_user_dbm)
    if not p_total > 0:
        raise ConfigError("total transmit power must be positive")
    if config.active:
        p_ris = 0.1 * p_total
        p_user = 0.9 * p_total / config.K
    else:
        p_ris = 0.0
        p_user = p_total / config.K
    return PowerBudget(p_user=p_user, p_ris=p_ris,
                       sigma_x2=p_user / config.ldpc_rate, p_total=p_total)


@dataclass(frozen=True)
class Geometry:
    ap_pos: np.ndarray
    ris_pos: np.ndarray
    user_pos: np.ndarray  # (K, 2)
    L: float = 400.0

    def ap_ris_distance(self) -> float:
        return float(max(np.linalg.norm(self.ris_pos - self.ap_pos), D_MIN))

    def ap_user_distances(self) -> np.ndarray:
        return np.maximum(np.linalg.norm(self.user_pos - self.ap_pos, axis=1), D_MIN)

    def ris_user_distances(self) -> np.ndarray:
        return np.maximum(np.linalg.norm(self.user_pos - self.ris_pos, axis=1), D_MIN)


def place_users(center, radius: float, K: int, rng: np.random.Generator) -> np.ndarray:
    """Draw K points uniformly over the closed disc around ``center``."""
    if radius < 0:
        raise ConfigError("radius must be non-negative")
    center = np.asarray(center, dtype=float)
    r = radius * np.sqrt(rng.random(K))
    theta = 2.0 * np.pi * rng.random(K)
    return center + np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def make_geometry(config: SystemConfig, rng: np.random.Generator) -> Geometry:
    users = place_users((config.user_x, config.user_y), config.user_radius, config.K, rng)
    return Geometry(
        ap_pos=np.zeros(2),
        ris_pos=np.array([config.ris_x, config.ris_y]),
        user_pos=users,
        L=float(np.hypot(config.user_x, config.user_y)),
    )
