"""Power allocation between data, tag and artificial noise.

Two derived factors drive the design:

* ``psi = P_t * phi`` fixes the legitimate user's detection probability
  once multiuser interference and AN leakage are negligible;
* ``omega = (1 - phi) / (P_t * phi)`` fixes the eavesdropper's key
  detection probability in the high-SNR limit.

Given a target pair, ``phi = 1 - omega * psi`` and ``P_t = psi / phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .authentication import HypothesisStats, _eve_gains, _stats_from_var0, _user_gains
from .numerics import dbm_to_watts

__all__ = [
    "PowerSplit",
    "Strategy",
    "InfeasibleSplit",
    "InfeasibleError",
    "psi_factor",
    "omega_factor",
    "allocate_from_factors",
    "strategy_splits",
    "approx_user_var0",
    "approx_user_stats",
    "eve_asymptotic_var0",
    "eve_asymptotic_stats",
    "CONVENTIONAL_TAG_POWER",
]

CONVENTIONAL_TAG_POWER = 0.015


class InfeasibleError(ValueError):
    """A requested allocation violates 0 < phi <= 1 or 0 < P_t < 1."""


@dataclass(frozen=True)
class PowerSplit:
    """Transmit power (watts), data/AN split ``phi`` and tag fraction ``P_t``."""

    P_Tx: float
    phi: float
    P_t: float

    def __post_init__(self):
        if not self.P_Tx > 0:
            raise ValueError(f"P_Tx must be positive, got {self.P_Tx}")
        if not 0.0 < self.phi <= 1.0:
            raise InfeasibleError(f"phi must lie in (0, 1], got {self.phi}")
        if not 0.0 <= self.P_t < 1.0:
            raise InfeasibleError(f"P_t must lie in [0, 1), got {self.P_t}")

    @classmethod
    def from_dbm(cls, P_Tx_dbm: float, phi: float, P_t: float) -> "PowerSplit":
        return cls(dbm_to_watts(P_Tx_dbm).value, phi, P_t)

    @property
    def P_s(self) -> float:
        return 1.0 - self.P_t

    @property
    def P_Tx_dbm(self) -> float:
        return 10.0 * math.log10(self.P_Tx) + 30.0

    @property
    def psi(self) -> float:
        return psi_factor(self.P_t, self.phi)

    @property
    def omega(self) -> float:
        return omega_factor(self.P_t, self.phi)

    @property
    def tag_power(self) -> float:
        """Absolute transmitted tag power in watts."""
        return self.P_t * self.P_Tx * self.phi

    def with_power(self, P_Tx: float) -> "PowerSplit":
        return PowerSplit(P_Tx, self.phi, self.P_t)


def psi_factor(P_t: float, phi: float) -> float:
    return P_t * phi


def omega_factor(P_t: float, phi: float) -> float:
    if P_t <= 0 or phi <= 0:
        raise ValueError("omega is undefined for P_t <= 0 or phi <= 0")
    return (1.0 - phi) / (P_t * phi)


def allocate_from_factors(psi: float, omega: float) -> tuple[float, float]:
    """Return ``(phi, P_t)`` realizing the given ``(psi, omega)``."""
    if not psi > 0:
        raise InfeasibleError(f"psi must be positive, got {psi}")
    if omega < 0:
        raise InfeasibleError(f"omega must be non-negative, got {omega}")
    if omega * psi >= 1.0:
        raise InfeasibleError(f"omega * psi = {omega * psi:g} must be < 1 (phi would be <= 0)")
    phi = 1.0 - omega * psi
    P_t = psi / phi
    if P_t >= 1.0:
        raise InfeasibleError(f"P_t = psi / phi = {P_t:g} must be < 1")
    return phi, P_t


@dataclass(frozen=True)
class Strategy:
    """How P_t follows phi along a sweep: fixed psi, fixed omega or fixed P_t."""

    kind: str
    value: float

    KINDS = ("fixed-psi", "fixed-omega", "conventional")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {self.KINDS}")
        if not self.value > 0 and not (self.kind == "fixed-omega" and self.value == 0):
            raise ValueError(f"{self.kind} parameter must be positive, got {self.value}")

    @classmethod
    def fixed_psi(cls, psi: float = 0.02) -> "Strategy":
        return cls("fixed-psi", psi)

    @classmethod
    def fixed_omega(cls, omega: float = 100.0) -> "Strategy":
        return cls("fixed-omega", omega)

    @classmethod
    def conventional(cls, P_t: float = CONVENTIONAL_TAG_POWER) -> "Strategy":
        return cls("conventional", P_t)

    @property
    def label(self) -> str:
        return f"{self.kind}={self.value:g}"

    def tag_fraction(self, phi: float) -> float:
        if self.kind == "fixed-psi":
            return self.value / phi
        if self.kind == "fixed-omega":
            if self.value == 0:
                raise InfeasibleError("omega = 0 only admits phi = 1, where P_t is free")
            return (1.0 - phi) / (self.value * phi)
        return self.value


@dataclass(frozen=True)
class InfeasibleSplit:
    """Grid point a strategy cannot realize; kept in place of a PowerSplit."""

    phi: float
    reason: str


def strategy_splits(strategy: Strategy, phi_grid: Sequence[float], P_Tx: float = 1.0
                    ) -> list[PowerSplit | InfeasibleSplit]:
    out: list[PowerSplit | InfeasibleSplit] = []
    for phi in phi_grid:
        phi = float(phi)
        try:
            if not 0.0 < phi <= 1.0:
                raise InfeasibleError(f"phi must lie in (0, 1], got {phi}")
            P_t = strategy.tag_fraction(phi)
            if not 0.0 < P_t < 1.0:
                raise InfeasibleError(f"{strategy.label} needs P_t = {P_t:g} at phi = {phi:g}")
            out.append(PowerSplit(P_Tx, phi, P_t))
        except InfeasibleError as exc:
            out.append(InfeasibleSplit(phi, str(exc)))
    return out


def approx_user_var0(realization, precoders, split: PowerSplit, u: int, sigma_n2: float, L_t: int) -> float:
    """H0 variance at user ``u`` keeping only the additive-noise term."""
    if not split.P_t > 0:
        raise ValueError("tag power fraction must be positive")
    g, _ = _user_gains(realization.H, precoders, u)
    return (L_t / 2) * (1.0 + sigma_n2 / (split.P_Tx * split.P_t * abs(g[u]) ** 2))


def approx_user_stats(realization, precoders, split: PowerSplit, u: int, sigma_n2: float,
                      L_t: int) -> HypothesisStats:
    return _stats_from_var0(L_t, approx_user_var0(realization, precoders, split, u, sigma_n2, L_t))


def eve_asymptotic_var0(realization, precoders, split: PowerSplit, u: int, L_t: int) -> float:
    """Eve's H0 variance as the receiver noise vanishes (AN term only)."""
    if not split.P_t > 0:
        raise ValueError("tag power fraction must be positive")
    _, q, c = _eve_gains(realization.H_e, precoders, u)
    return (L_t / 2) * (1.0 + float(np.sum(np.abs(c) ** 2)) / (split.P_t * q * q))


def eve_asymptotic_stats(realization, precoders, split: PowerSplit, u: int, L_t: int) -> HypothesisStats:
    return _stats_from_var0(L_t, eve_asymptotic_var0(realization, precoders, split, u, L_t))
