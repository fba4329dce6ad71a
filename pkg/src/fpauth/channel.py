"""mmWave downlink geometry and channel synthesis (ULA, few-path model, UMi pathloss)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .numerics import RngLike, RngStream, as_generator, dbm_to_watts, sample_complex_normal, sample_laplace

__all__ = [
    "SystemConfig",
    "Geometry",
    "ChannelRealization",
    "pathloss_db",
    "steering_vector",
    "sample_geometry",
    "sample_user_channel",
    "sample_eve_channel",
    "sample_realization",
    "noise_variance",
]


class ConfigError(ValueError):
    """Raised when a scenario violates a configuration constraint."""


@dataclass(frozen=True)
class SystemConfig:
    """Scenario constants.  Defaults reproduce the reference simulation table.

    ``Z=None`` uses the full null space (N - K streams); ``beta=None`` uses the
    MMSE-style regularization K / rho at each transmit power.
    """

    N: int = 16
    M: int = 6
    K: int = 6
    Z: int | None = None
    L_p: int = 10
    delta: float = 10.0  # degrees
    f_c: float = 28.0  # GHz
    B: float = 1e8  # Hz
    noise_figure: float = 9.0  # dB
    thermal_noise_density: float = -174.0  # dBm/Hz
    d_s_over_lambda: float = 0.5
    L_t: int = 2048
    p_fa: float = 0.001
    key_space_size: int = 2**16
    d_H_range: tuple[float, float] = (10.0, 100.0)
    d_V: float = 100.0
    d_e_range: tuple[float, float] = (50.0, 100.0)
    eve_los_range: tuple[float, float] = (-math.pi / 3, math.pi / 3)
    beta: float | None = None
    tag_in_sinr: bool = False

    def __post_init__(self):
        object.__setattr__(self, "d_H_range", tuple(float(v) for v in self.d_H_range))
        object.__setattr__(self, "d_e_range", tuple(float(v) for v in self.d_e_range))
        object.__setattr__(self, "eve_los_range", tuple(float(v) for v in self.eve_los_range))
        self.validate()

    @property
    def n_an(self) -> int:
        return self.N - self.K if self.Z is None else self.Z

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.K >= 1, f"K must be >= 1, got {self.K}")
        need(self.N > self.K, f"N must exceed K (N={self.N}, K={self.K})")
        need(1 <= self.n_an <= self.N - self.K, f"Z must lie in [1, N-K={self.N - self.K}], got {self.n_an}")
        need(self.M >= 1, f"M must be >= 1, got {self.M}")
        need(self.L_p >= 1, f"L_p must be >= 1, got {self.L_p}")
        need(self.L_t >= 1, f"L_t must be >= 1, got {self.L_t}")
        need(0.0 < self.p_fa < 1.0, f"p_fa must lie in (0, 1), got {self.p_fa}")
        need(self.key_space_size >= 2, f"key_space_size must be >= 2, got {self.key_space_size}")
        need(self.delta > 0, "delta must be positive")
        need(self.f_c > 0 and self.B > 0, "f_c and B must be positive")
        need(self.d_V > 0, "d_V must be positive")
        for name in ("d_H_range", "d_e_range"):
            lo, hi = getattr(self, name)
            need(0 <= lo <= hi, f"{name} must satisfy 0 <= low <= high")
        need(self.d_e_range[0] > 0, "Eve distance must be positive")
        need(self.beta is None or self.beta >= 0, "beta must be non-negative")

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def pathloss_db(d, f_c):
    """3GPP UMi pathloss in dB; ``d`` in meters, ``f_c`` in GHz."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or f_c <= 0:
        raise ValueError("distance and carrier frequency must be positive")
    out = 32.4 + 21.0 * np.log10(d) + 20.0 * math.log10(f_c)
    return out if out.ndim else float(out)


def steering_vector(theta, n: int, d_s_over_lambda: float = 0.5) -> np.ndarray:
    """ULA response.  A scalar ``theta`` gives shape (n,), an array gives (n, len(theta))."""
    idx = np.arange(n)
    th = np.asarray(theta, dtype=float)
    phase = -2j * math.pi * d_s_over_lambda * np.multiply.outer(idx, np.sin(th))
    return np.exp(phase) / math.sqrt(n)


def noise_variance(cfg: SystemConfig) -> float:
    """Receiver noise power in watts over the full bandwidth."""
    dbm = cfg.thermal_noise_density + 10.0 * math.log10(cfg.B) + cfg.noise_figure
    return dbm_to_watts(dbm).value


@dataclass(frozen=True)
class Geometry:
    d_H: np.ndarray  # (K,) horizontal user distances
    d_V: float
    theta_los: np.ndarray  # (K,) user LoS departure angles
    d_e: float
    theta_los_e: float
    zeta_los_e: float

    @property
    def d(self) -> np.ndarray:
        return np.hypot(self.d_H, self.d_V)


@dataclass(frozen=True)
class ChannelRealization:
    H: np.ndarray  # (N, K), column k is h_k
    H_e: np.ndarray  # (N, M)
    geometry: Geometry
    alpha: np.ndarray = field(repr=False)  # (K, L_p)
    theta: np.ndarray = field(repr=False)  # (K, L_p)
    alpha_e: np.ndarray = field(repr=False)  # (L_p,)
    theta_e: np.ndarray = field(repr=False)
    zeta_e: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.H.shape[1]


def sample_geometry(cfg: SystemConfig, rng: RngLike) -> Geometry:
    g = as_generator(rng)
    d_H = g.uniform(*cfg.d_H_range, size=cfg.K)
    sign = np.where(g.random(cfg.K) < 0.5, -1.0, 1.0)
    theta_los = sign * np.arctan(d_H / cfg.d_V)
    d_e = float(g.uniform(*cfg.d_e_range))
    th_e, ze_e = g.uniform(*cfg.eve_los_range, size=2)
    return Geometry(d_H=d_H, d_V=float(cfg.d_V), theta_los=theta_los, d_e=d_e,
                    theta_los_e=float(th_e), zeta_los_e=float(ze_e))


def _user_paths(geom: Geometry, k: int, cfg: SystemConfig, rng: RngLike):
    g = as_generator(rng)
    alpha = sample_complex_normal(g, cfg.L_p)
    theta = sample_laplace(g, geom.theta_los[k], math.radians(cfg.delta), cfg.L_p)
    return alpha, theta


def _user_vector(alpha, theta, d_k, cfg: SystemConfig) -> np.ndarray:
    amp = 10.0 ** (pathloss_db(d_k, cfg.f_c) / 20.0)
    A = steering_vector(theta, cfg.N, cfg.d_s_over_lambda)
    return math.sqrt(cfg.N / cfg.L_p) * (A @ alpha) / amp


def sample_user_channel(geom: Geometry, k: int, cfg: SystemConfig, rng: RngLike) -> np.ndarray:
    """Channel vector h_k (shape (N,)) of user ``k`` (0-based)."""
    if not 0 <= k < cfg.K:
        raise IndexError(f"user index {k} outside [0, {cfg.K})")
    alpha, theta = _user_paths(geom, k, cfg, rng)
    return _user_vector(alpha, theta, geom.d[k], cfg)


def _eve_paths(geom: Geometry, cfg: SystemConfig, rng: RngLike):
    g = as_generator(rng)
    spread = math.radians(cfg.delta)
    alpha = sample_complex_normal(g, cfg.L_p)
    theta = sample_laplace(g, geom.theta_los_e, spread, cfg.L_p)
    zeta = sample_laplace(g, geom.zeta_los_e, spread, cfg.L_p)
    return alpha, theta, zeta


def _eve_matrix(alpha, theta, zeta, d_e, cfg: SystemConfig) -> np.ndarray:
    amp = 10.0 ** (pathloss_db(d_e, cfg.f_c) / 20.0)
    A_N = steering_vector(theta, cfg.N, cfg.d_s_over_lambda)
    A_M = steering_vector(zeta, cfg.M, cfg.d_s_over_lambda)
    return math.sqrt(cfg.N * cfg.M / cfg.L_p) * (A_N * alpha) @ A_M.conj().T / amp


def sample_eve_channel(geom: Geometry, cfg: SystemConfig, rng: RngLike) -> np.ndarray:
    """Eavesdropper channel H_e of shape (N, M)."""
    return _eve_matrix(*_eve_paths(geom, cfg, rng), geom.d_e, cfg)


def sample_realization(cfg: SystemConfig, stream: RngStream) -> ChannelRealization:
    """Draw geometry, all user channels and the Eve channel from one stream.

    Each component uses its own child stream, so e.g. user 3's channel does
    not change when K or L_p of another component changes.
    """
    geom = sample_geometry(cfg, stream.child(0))
    alphas, thetas, cols = [], [], []
    for k in range(cfg.K):
        a, th = _user_paths(geom, k, cfg, stream.child(1, k))
        alphas.append(a)
        thetas.append(th)
        cols.append(_user_vector(a, th, geom.d[k], cfg))
    a_e, th_e, ze_e = _eve_paths(geom, cfg, stream.child(2))
    return ChannelRealization(
        H=np.column_stack(cols),
        H_e=_eve_matrix(a_e, th_e, ze_e, geom.d_e, cfg),
        geometry=geom,
        alpha=np.array(alphas),
        theta=np.array(thetas),
        alpha_e=a_e,
        theta_e=th_e,
        zeta_e=ze_e,
    )
