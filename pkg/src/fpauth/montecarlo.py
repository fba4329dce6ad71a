"""Link-level Monte Carlo engine.

Every trial draws fresh data, tags, artificial noise and receiver noise for a
fixed channel realization and re-runs the receivers.  Draws come from the
stream keyed by ``(seed, realization, trial)``, so results do not depend on
how trials are distributed over workers.  The same draws are reused at every
(split, power) point of a realization (common random numbers), which keeps
sweeps affordable and makes curves smoother; each point on its own is still
an ordinary Monte Carlo estimate.

The user receiver is evaluated through inner products of the unit-power
source sequences with the reference tags.  This is algebraically the same
as synthesizing the received block, subtracting the known data, equalizing
and correlating (see ``tests/test_montecarlo.py``), but costs O(K) per point
instead of O(K * L_t).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .authentication import (
    detection_probability,
    detection_threshold,
    eve_hypothesis_stats,
    eve_tag_estimate,
    generate_tag,
    generate_tags,
    key_detection_probability,
    user_hypothesis_stats,
)
from .channel import ChannelRealization, SystemConfig, noise_variance, sample_realization
from .numerics import RngStream, dbm_to_watts, sample_complex_normal
from .powerctl import InfeasibleSplit, PowerSplit, eve_asymptotic_stats
from .precoding import PrecoderSet, build_precoders, sum_rate

__all__ = [
    "TrialPlan",
    "MetricsRecord",
    "transmit_block",
    "synthesize_received_user",
    "synthesize_received_eve",
    "realization_stream",
    "trial_stream",
    "default_beta",
    "run_trials",
]

MAX_MC_KEY_SPACE = 4096

_REALIZATION_STREAM = 0
_TRIAL_STREAM = 1


def realization_stream(seed: int, realization: int) -> RngStream:
    return RngStream(seed, _REALIZATION_STREAM, (realization,))


def trial_stream(seed: int, realization: int, trial: int) -> RngStream:
    return RngStream(seed, _TRIAL_STREAM, (realization, trial))


def default_beta(cfg: SystemConfig, P_Tx: float) -> float:
    """Regularization K / rho unless the config pins beta."""
    if cfg.beta is not None:
        return cfg.beta
    return cfg.K * noise_variance(cfg) / P_Tx


# ---------------------------------------------------------------------------
# signal synthesis


def _check_blocks(*blocks):
    lengths = {np.shape(b)[-1] for b in blocks if b is not None}
    if len(lengths) > 1:
        raise ValueError(f"sequence length mismatch: {sorted(lengths)}")


def transmit_block(precoders: PrecoderSet, split: PowerSplit, data, tags, an) -> np.ndarray:
    """Antenna-domain block (N, L_t) radiated by the base station."""
    _check_blocks(data, tags, an)
    payload = math.sqrt(split.P_s) * np.asarray(data) + math.sqrt(split.P_t) * np.asarray(tags)
    X = precoders.W @ payload
    if precoders.V.size:
        X = X + precoders.V @ np.asarray(an)
    return math.sqrt(split.P_Tx) * X


def synthesize_received_user(realization: ChannelRealization, precoders: PrecoderSet, split: PowerSplit,
                             data, tags, an, noise, u: int | None = None) -> np.ndarray:
    """Received samples of user ``u`` (shape (L_t,)), or of all users (K, L_t).

    ``noise`` holds the receiver noise samples already scaled to sigma_n.
    """
    _check_blocks(data, tags, an, noise)
    X = transmit_block(precoders, split, data, tags, an)
    if u is None:
        return realization.H.conj().T @ X + np.asarray(noise)
    return realization.H[:, u].conj() @ X + np.asarray(noise)


def synthesize_received_eve(realization: ChannelRealization, precoders: PrecoderSet, split: PowerSplit,
                            data, tags, an, noise) -> np.ndarray:
    """Eve's (M, L_t) block; ``noise`` is (M, L_t), already scaled."""
    _check_blocks(data, tags, an, noise)
    X = transmit_block(precoders, split, data, tags, an)
    return realization.H_e.conj().T @ X + np.asarray(noise)


# ---------------------------------------------------------------------------
# plan / records


@dataclass(frozen=True)
class TrialPlan:
    """What to simulate.

    ``splits`` give (phi, P_t); their own P_Tx is ignored and replaced by
    every value of ``ptx_dbm``.  ``labels`` (optional, one per split) are
    carried into the records.
    """

    cfg: SystemConfig
    splits: Sequence[PowerSplit | InfeasibleSplit]
    ptx_dbm: Sequence[float]
    n_realizations: int = 1
    n_trials: int = 1000
    seed: int = 0
    analytic_only: bool = False
    with_false_alarm: bool = True
    with_ml_attack: bool = False
    eve_key_space_size_for_mc: int = 256
    labels: Sequence[str] | None = None

    def __post_init__(self):
        if self.n_realizations < 1 or self.n_trials < 1:
            raise ValueError("realization and trial counts must be >= 1")
        if not 2 <= self.eve_key_space_size_for_mc <= MAX_MC_KEY_SPACE:
            raise ValueError(f"eve_key_space_size_for_mc must lie in [2, {MAX_MC_KEY_SPACE}]")
        if self.eve_key_space_size_for_mc > self.cfg.key_space_size:
            raise ValueError("the Monte Carlo key space cannot exceed the configured key space")
        if not self.splits or not len(self.ptx_dbm):
            raise ValueError("plan needs at least one split and one transmit power")
        if self.labels is not None and len(self.labels) != len(self.splits):
            raise ValueError("labels must match splits one to one")


def _ci(p: float, n: int) -> float:
    return 1.96 * math.sqrt(p * (1.0 - p) / n) if n else math.nan


@dataclass
class MetricsRecord:
    label: str
    realization: int
    P_Tx_dbm: float
    phi: float
    P_t: float | None
    feasible: bool = True
    reason: str = ""
    beta: float | None = None
    psi: float | None = None
    omega: float | None = None
    # analytic, averaged over users (per-user values below)
    P_D: float | None = None
    P_K: float | None = None
    P_K_asymptotic: float | None = None
    P_K_mc_space: float | None = None
    sum_rate: float | None = None
    P_D_users: list[float] = field(default_factory=list)
    P_K_users: list[float] = field(default_factory=list)
    P_K_mc_space_users: list[float] = field(default_factory=list)
    # empirical
    n_trials: int = 0
    detections: list[int] = field(default_factory=list)
    false_alarms: list[int] = field(default_factory=list)
    key_hits: list[int] = field(default_factory=list)
    key_attempts: list[int] = field(default_factory=list)

    @property
    def has_empirical(self) -> bool:
        return self.n_trials > 0

    def _rate(self, counts: list[int], n_each: list[int] | int):
        if not counts:
            return None, None
        n = sum(n_each) if isinstance(n_each, list) else n_each * len(counts)
        if n == 0:
            return None, None
        p = sum(counts) / n
        return p, _ci(p, n)

    @property
    def P_D_hat(self):
        return self._rate(self.detections, self.n_trials)[0]

    @property
    def P_D_ci(self):
        return self._rate(self.detections, self.n_trials)[1]

    @property
    def p_fa_hat(self):
        return self._rate(self.false_alarms, self.n_trials)[0]

    @property
    def p_fa_ci(self):
        return self._rate(self.false_alarms, self.n_trials)[1]

    @property
    def P_K_hat(self):
        return self._rate(self.key_hits, self.key_attempts)[0]

    @property
    def P_K_ci(self):
        return self._rate(self.key_hits, self.key_attempts)[1]

    def user_rate(self, kind: str, u: int) -> float:
        if kind == "P_D":
            return self.detections[u] / self.n_trials
        if kind == "p_fa":
            return self.false_alarms[u] / self.n_trials
        if kind == "P_K":
            return self.key_hits[u] / self.key_attempts[u]
        raise KeyError(kind)


# ---------------------------------------------------------------------------
# per-point analytic evaluation


@dataclass
class _Point:
    index: int
    label: str
    P_Tx_dbm: float
    split: PowerSplit | None
    reason: str = ""
    precoders: PrecoderSet | None = None
    sigma_n: float = 0.0
    # user receiver, all users at once
    coef: np.ndarray | None = None  # (K, 2K+Z) coefficients of t_hat on the sources
    noise_coef: np.ndarray | None = None  # (K,)
    tau0: np.ndarray | None = None
    record: MetricsRecord | None = None


def _prepare_point(cfg: SystemConfig, real: ChannelRealization, r: int, index: int, label: str,
                   split: PowerSplit | InfeasibleSplit, ptx_dbm: float, plan: TrialPlan) -> _Point:
    if isinstance(split, InfeasibleSplit):
        rec = MetricsRecord(label, r, ptx_dbm, split.phi, None, feasible=False, reason=split.reason)
        return _Point(index, label, ptx_dbm, None, split.reason, record=rec)
    P_Tx = dbm_to_watts(ptx_dbm).value
    sp = split.with_power(P_Tx)
    s2 = noise_variance(cfg)
    beta = default_beta(cfg, P_Tx)
    pre = build_precoders(real.H, sp.phi, beta, cfg.n_an)
    rec = MetricsRecord(label, r, ptx_dbm, sp.phi, sp.P_t, beta=beta, psi=sp.psi,
                        omega=sp.omega)
    rec.sum_rate = sum_rate(pre.W, pre.V, real.H, sp.P_s, P_Tx / s2, sp.P_t if cfg.tag_in_sinr else 0.0)
    point = _Point(index, label, ptx_dbm, sp, precoders=pre, sigma_n=math.sqrt(s2), record=rec)
    if sp.P_t <= 0:
        rec.reason = "P_t = 0: no tag transmitted"
        return point

    K = cfg.K
    tau0 = np.empty(K)
    for u in range(K):
        st = user_hypothesis_stats(real, pre, sp, u, s2, cfg.L_t)
        tau0[u] = detection_threshold(cfg.p_fa, st.sigma0)
        rec.P_D_users.append(detection_probability(st, tau0[u]))
        est = eve_hypothesis_stats(real, pre, sp, u, s2, cfg.L_t)
        rec.P_K_users.append(key_detection_probability(est, cfg.key_space_size))
        rec.P_K_mc_space_users.append(key_detection_probability(est, plan.eve_key_space_size_for_mc))
    rec.P_D = float(np.mean(rec.P_D_users))
    rec.P_K = float(np.mean(rec.P_K_users))
    rec.P_K_mc_space = float(np.mean(rec.P_K_mc_space_users))
    rec.P_K_asymptotic = float(np.mean([
        key_detection_probability(eve_asymptotic_stats(real, pre, sp, u, cfg.L_t), cfg.key_space_size)
        for u in range(K)
    ]))
    point.tau0 = tau0

    # t_hat_u = sum_j coef[u, j] * source_j + noise_coef[u] * unit_noise_u,
    # sources ordered as [data (K); tags (K); AN (Z)]
    G = real.H.conj().T @ pre.W  # (K, K)
    A = real.H.conj().T @ pre.V  # (K, Z)
    eq = math.sqrt(sp.P_Tx * sp.P_t) * np.diag(G)  # LS equalizer per user
    coef = math.sqrt(sp.P_Tx) * np.hstack([math.sqrt(sp.P_s) * G, math.sqrt(sp.P_t) * G, A])
    coef[np.arange(K), np.arange(K)] = 0.0  # own data removed by the receiver
    point.coef = coef / eq[:, None]
    point.noise_coef = point.sigma_n / eq
    return point


# ---------------------------------------------------------------------------
# trials


@dataclass
class _Draw:
    data: np.ndarray
    tags: np.ndarray
    an: np.ndarray
    noise_u: np.ndarray
    gram: np.ndarray  # conj(sources) . [tags, wrong tags]^T, (2K+Z, 2K)
    noise_gram: np.ndarray  # (K, 2): <noise_u, tag_u>, <noise_u, wrong_u>
    target: int = 0
    noise_e: np.ndarray | None = None
    key_tags: np.ndarray | None = None
    true_key: int = 0
    wrong_tags: np.ndarray | None = None


def _draw_trial(cfg: SystemConfig, plan: TrialPlan, r: int, t: int) -> _Draw:
    g = trial_stream(plan.seed, r, t).generator()
    K, Z, L, S = cfg.K, cfg.n_an, cfg.L_t, plan.eve_key_space_size_for_mc
    keys = g.integers(0, S, size=K)
    wrong = (keys + 1 + g.integers(0, S - 1, size=K)) % S
    n_rows = 2 * K + Z + (cfg.M if plan.with_ml_attack else 0)
    block = sample_complex_normal(g, (n_rows, L))
    data, an, noise_u = block[:K], block[K:K + Z], block[K + Z:2 * K + Z]
    noise_e = block[2 * K + Z:] if plan.with_ml_attack else None

    target = t % K
    key_tags = None
    tags = np.empty((K, L), dtype=complex)
    if plan.with_ml_attack:
        key_tags = generate_tags(data[target], range(S))
    for k in range(K):
        tags[k] = key_tags[keys[k]] if k == target and key_tags is not None else generate_tag(data[k], keys[k])
    refs, wrong_tags = tags, None
    if plan.with_false_alarm:
        wrong_tags = np.stack([generate_tag(data[k], wrong[k]) for k in range(K)])
        refs = np.vstack([tags, wrong_tags])
    # gram[j, m] = <source_j, ref_m> with sources ordered [data; tags; AN]
    rc = refs.conj()
    gram = np.hstack([rc @ data.T, rc @ tags.T, rc @ an.T]).conj().T
    noise_gram = np.einsum("kl,jkl->kj", noise_u.conj(), refs.reshape(-1, K, L))
    return _Draw(data, tags, an, noise_u, gram, noise_gram, target, noise_e, key_tags, int(keys[target]),
                 wrong_tags)


def _user_statistics(point: _Point, draw: _Draw, K: int):
    """Correlation of every user's tag estimate with its true tag and (if drawn) a wrong-key tag."""
    idx = np.arange(K)
    tau = (point.coef.conj() @ draw.gram).real  # rows: users, cols: reference tags
    tau_true = tau[idx, idx] + (point.noise_coef.conj() * draw.noise_gram[:, 0]).real
    if draw.gram.shape[1] == K:
        return tau_true, None
    tau_wrong = tau[idx, K + idx] + (point.noise_coef.conj() * draw.noise_gram[:, 1]).real
    return tau_true, tau_wrong


def _evaluate(point: _Point, draw: _Draw, plan: TrialPlan, cfg: SystemConfig, real: ChannelRealization):
    """Return (detections, false alarms, key hit or None) for one trial at one point."""
    tau_true, tau_wrong = _user_statistics(point, draw, cfg.K)
    det = tau_true > point.tau0
    fa = None if tau_wrong is None else tau_wrong > point.tau0
    hit = None
    if plan.with_ml_attack:
        u = draw.target
        Y_e = synthesize_received_eve(real, point.precoders, point.split, draw.data, draw.tags, draw.an,
                                      point.sigma_n * draw.noise_e)
        t_e = eve_tag_estimate(Y_e, real, point.precoders, point.split, u, draw.data, draw.tags)
        scores = (draw.key_tags @ t_e.conj()).real
        hit = int(np.argmax(scores)) == draw.true_key
    return det, fa, hit


def _run_realization(plan: TrialPlan, r: int) -> list[MetricsRecord]:
    cfg = plan.cfg
    real = sample_realization(cfg, realization_stream(plan.seed, r))
    labels = plan.labels or [f"split{i}" for i in range(len(plan.splits))]
    points = []
    for i, split in enumerate(plan.splits):
        for p in plan.ptx_dbm:
            points.append(_prepare_point(cfg, real, r, len(points), labels[i], split, float(p), plan))
    live = [pt for pt in points if pt.tau0 is not None]
    if plan.analytic_only or not live:
        return [pt.record for pt in points]

    K = cfg.K
    det = np.zeros((len(live), K), dtype=np.int64)
    fa = np.zeros((len(live), K), dtype=np.int64)
    hits = np.zeros((len(live), K), dtype=np.int64)
    tries = np.zeros((len(live), K), dtype=np.int64)
    for t in range(plan.n_trials):
        draw = _draw_trial(cfg, plan, r, t)
        for j, pt in enumerate(live):
            d, f, h = _evaluate(pt, draw, plan, cfg, real)
            det[j] += d
            if f is not None:
                fa[j] += f
            if h is not None:
                hits[j, draw.target] += h
                tries[j, draw.target] += 1
    for j, pt in enumerate(live):
        rec = pt.record
        rec.n_trials = plan.n_trials
        rec.detections = det[j].tolist()
        if plan.with_false_alarm:
            rec.false_alarms = fa[j].tolist()
        if plan.with_ml_attack:
            rec.key_hits = hits[j].tolist()
            rec.key_attempts = tries[j].tolist()
    return [pt.record for pt in points]


def run_trials(plan: TrialPlan, workers: int = 1) -> list[MetricsRecord]:
    """Analytic and (unless ``analytic_only``) empirical metrics per point.

    Records are ordered by (realization, split, P_Tx) whatever ``workers`` is.
    """
    realizations = range(plan.n_realizations)
    if workers <= 1:
        chunks = [_run_realization(plan, r) for r in realizations]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda r: _run_realization(plan, r), realizations))
    return [rec for chunk in chunks for rec in chunk]
