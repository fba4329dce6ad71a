"""Random streams and scalar kernels shared by the simulation modules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, special

__all__ = [
    "RngStream",
    "as_generator",
    "DbValue",
    "std_normal_cdf",
    "std_normal_logcdf",
    "std_normal_quantile",
    "std_normal_pdf",
    "gauss_integral_power_cdf",
    "sample_complex_normal",
    "sample_laplace",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Immutable descriptor of an independent random substream.

    The generator is rebuilt from ``(seed, stream_id, path)`` every time
    :meth:`generator` is called, so a stream can be handed to any worker and
    always yields the same sequence.  ``path`` subdivides a stream further
    (e.g. one child per user inside a trial).
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for v in (self.seed, self.stream_id, *self.path):
            if not 0 <= int(v) <= _MASK64:
                raise ValueError(f"stream key {v} is not an unsigned 64-bit integer")

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.PCG64(ss))


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# units

_UNITS = ("dB", "dBm", "W")


@dataclass(frozen=True)
class DbValue:
    value: float
    unit: str

    def __post_init__(self):
        if self.unit not in _UNITS:
            raise ValueError(f"unknown unit {self.unit!r}; expected one of {_UNITS}")


def _check_unit(x: DbValue, unit: str) -> float:
    if not isinstance(x, DbValue):
        return float(x)
    if x.unit != unit:
        raise ValueError(f"expected a value in {unit}, got {x.unit}")
    return x.value


def dbm_to_watts(x: DbValue | float) -> DbValue:
    return DbValue(10.0 ** ((_check_unit(x, "dBm") - 30.0) / 10.0), "W")


def watts_to_dbm(x: DbValue | float) -> DbValue:
    w = _check_unit(x, "W")
    if w <= 0:
        raise ValueError("power must be positive to express in dBm")
    return DbValue(10.0 * math.log10(w) + 30.0, "dBm")


def db_to_linear(x: DbValue | float) -> float:
    return 10.0 ** (_check_unit(x, "dB") / 10.0)


# ---------------------------------------------------------------------------
# Gaussian kernels


def std_normal_cdf(x):
    return special.ndtr(x)


def std_normal_logcdf(x):
    return special.log_ndtr(x)


def std_normal_quantile(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)) or np.any(np.isnan(p_arr)):
        raise ValueError(f"quantile requires 0 < p < 1, got {p}")
    return special.ndtri(p)


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


_WINDOW = 10.0


def gauss_integral_power_cdf(mu0: float, sigma0: float, mu1: float, sigma1: float,
                             cardinality: int) -> float:
    """Probability that one N(mu1, sigma1^2) draw beats ``cardinality - 1``
    independent N(mu0, sigma0^2) draws.

    Integrates ``Phi((t - mu0)/sigma0)**(cardinality - 1)`` against the
    N(mu1, sigma1^2) density.  The power is taken in the log domain, so key
    spaces of 2**16 and beyond do not underflow.  Integration runs over
    mu1 +- 10 sigma1; the mass outside is below 2*Phi(-10) ~ 1.5e-23.
    """
    if not (sigma0 > 0 and sigma1 > 0):
        raise ValueError("standard deviations must be positive")
    cardinality = int(cardinality)
    if cardinality < 1:
        raise ValueError("cardinality must be >= 1")
    if cardinality == 1:
        return 1.0
    n = cardinality - 1
    a = sigma1 / sigma0
    b = (mu1 - mu0) / sigma0

    def integrand(x):
        return math.exp(n * special.log_ndtr(a * x + b) - 0.5 * x * x) * _INV_SQRT_2PI

    # the power of Phi switches from 0 to 1 around the level where Phi^n = 1/2
    breaks = []
    for level in (1e-12, 0.5, 1 - 1e-12):
        z = float(special.ndtri(level ** (1.0 / n)))
        x = (z - b) / a
        if -_WINDOW < x < _WINDOW:
            breaks.append(x)
    val, _ = integrate.quad(integrand, -_WINDOW, _WINDOW, points=sorted(set(breaks)) or None,
                            epsabs=1e-12, epsrel=1e-10, limit=400)
    return min(1.0, max(0.0, val))


# ---------------------------------------------------------------------------
# samplers


def sample_complex_normal(rng: RngLike, n, scale: float = 1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, scale**2) samples; ``n`` may be a shape."""
    g = as_generator(rng)
    shape = (n,) if np.isscalar(n) else tuple(n)
    z = g.standard_normal(shape + (2,))
    z *= scale / math.sqrt(2.0)
    return z.view(np.complex128)[..., 0]


def sample_laplace(rng: RngLike, location, spread_std: float, size=None):
    """Laplace angles with standard deviation ``spread_std`` (scale = std/sqrt 2)."""
    if not spread_std > 0:
        raise ValueError("spread_std must be positive")
    g = as_generator(rng)
    return g.laplace(location, spread_std / math.sqrt(2.0), size)
