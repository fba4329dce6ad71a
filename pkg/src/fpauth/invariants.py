"""Structural checks run by ``fpauth validate`` on sampled realizations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .authentication import detection_probability, detection_threshold, eve_hypothesis_stats, \
    key_detection_probability, user_hypothesis_stats
from .channel import SystemConfig, noise_variance, sample_realization
from .montecarlo import default_beta, realization_stream
from .numerics import dbm_to_watts
from .powerctl import PowerSplit, allocate_from_factors, approx_user_stats, eve_asymptotic_stats, \
    omega_factor, psi_factor
from .precoding import build_precoders

__all__ = ["CheckResult", "run_invariant_suite"]

PHI_GRID = tuple(round(0.1 * i, 10) for i in range(1, 10))
PSI_PAIRS = ((0.04, 0.5), (0.025, 0.8), (0.02 / 0.9, 0.9))
OMEGA_PHIS = (0.5, 0.8, 0.9)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _worst(values) -> float:
    return float(np.max(values)) if len(values) else 0.0


def _null_space(cfg, reals, ptx):
    worst = []
    for real in reals:
        for phi in PHI_GRID:
            pre = build_precoders(real.H, phi, default_beta(cfg, ptx), cfg.n_an)
            leak = np.abs(real.H.conj().T @ pre.V)
            scale = np.linalg.norm(real.H, axis=0)[:, None] * np.linalg.norm(pre.V, axis=0)[None, :]
            worst.append(np.max(leak / scale))
    w = _worst(worst)
    return w <= 1e-10, f"max |h^H v| / (|h||v|) = {w:.3e} (limit 1e-10)"


def _power_budget(cfg, reals, ptx):
    errs = []
    for real in reals:
        for phi in PHI_GRID:
            pre = build_precoders(real.H, phi, default_beta(cfg, ptx), cfg.n_an)
            errs.append(abs(pre.total_power - 1.0))
            errs.extend(np.abs(np.sum(np.abs(pre.W) ** 2, axis=0) - phi / cfg.K))
            errs.extend(np.abs(np.sum(np.abs(pre.V) ** 2, axis=0) - (1 - phi) / cfg.n_an))
    w = _worst(errs)
    return w <= 1e-10, f"max normalization error = {w:.3e} (limit 1e-10)"


def _variance_gap(cfg, reals, ptx):
    s2 = noise_variance(cfg)
    bad = 0
    for real in reals:
        for phi in PHI_GRID:
            pre = build_precoders(real.H, phi, default_beta(cfg, ptx), cfg.n_an)
            sp = PowerSplit(ptx, phi, 0.02)
            for u in range(cfg.K):
                for st in (user_hypothesis_stats(real, pre, sp, u, s2, cfg.L_t),
                           eve_hypothesis_stats(real, pre, sp, u, s2, cfg.L_t)):
                    bad += st.var1 - st.var0 != cfg.L_t / 2
    return bad == 0, f"{bad} statistic pairs with var1 - var0 != L_t/2"


def _proposition_1(cfg, reals, ptx):
    s2 = noise_variance(cfg)
    spread_approx, spread_exact = 0.0, 0.0
    for real in reals:
        pres = {phi: build_precoders(real.H, phi, 0.0, cfg.n_an) for _, phi in PSI_PAIRS}
        for u in range(cfg.K):
            approx, exact = [], []
            for P_t, phi in PSI_PAIRS:
                sp = PowerSplit(ptx, phi, P_t)
                st = approx_user_stats(real, pres[phi], sp, u, s2, cfg.L_t)
                approx.append(detection_probability(st, detection_threshold(cfg.p_fa, st.sigma0)))
                st = user_hypothesis_stats(real, pres[phi], sp, u, s2, cfg.L_t)
                exact.append(detection_probability(st, detection_threshold(cfg.p_fa, st.sigma0)))
            spread_approx = max(spread_approx, np.ptp(approx))
            spread_exact = max(spread_exact, np.ptp(exact))
    ok = spread_approx <= 1e-9 and spread_exact < 0.01
    return ok, f"equal-psi P_D spread: approximate {spread_approx:.2e} (<=1e-9), exact {spread_exact:.2e} (<0.01)"


def _proposition_2(cfg, reals, ptx):
    spread = 0.0
    omega = 100.0
    for real in reals:
        for u in range(cfg.K):
            vals = []
            for phi in OMEGA_PHIS:
                P_t = (1 - phi) / (omega * phi)
                pre = build_precoders(real.H, phi, 0.0, cfg.n_an)
                st = eve_asymptotic_stats(real, pre, PowerSplit(ptx, phi, P_t), u, cfg.L_t)
                vals.append(key_detection_probability(st, cfg.key_space_size))
            spread = max(spread, np.ptp(vals))
    return spread <= 1e-9, f"equal-omega asymptotic P_K spread {spread:.2e} (<=1e-9)"


def _factor_round_trip(cfg, reals, ptx):
    worst = 0.0
    for psi in (0.001, 0.002, 0.005, 0.01, 0.02, 0.05):
        for omega in np.linspace(0, 0.99 * (1 - psi) / psi, 12):
            phi, P_t = allocate_from_factors(psi, omega)
            worst = max(worst, abs(psi_factor(P_t, phi) - psi))
            if phi < 1:
                worst = max(worst, abs(omega_factor(P_t, phi) - omega) / max(1.0, omega))
    return worst <= 1e-12, f"max round-trip error {worst:.2e} (<=1e-12)"


CHECKS: dict[str, Callable] = {
    "null_space": _null_space,
    "power_normalization": _power_budget,
    "variance_gap": _variance_gap,
    "proposition_1_psi": _proposition_1,
    "proposition_2_omega": _proposition_2,
    "factor_round_trip": _factor_round_trip,
}


def run_invariant_suite(cfg: SystemConfig, n_realizations: int = 10, seed: int = 0,
                        ptx_dbm: float = 30.0) -> list[CheckResult]:
    reals = [sample_realization(cfg, realization_stream(seed, r)) for r in range(n_realizations)]
    ptx = dbm_to_watts(ptx_dbm).value
    out = []
    for name, check in CHECKS.items():
        try:
            ok, detail = check(cfg, reals, ptx)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
