"""Fingerprint tags, tag estimation at the user and at the eavesdropper, and
the Gaussian detection / key-guessing probabilities.

Sequences are handled in the sample domain: a received block is the length
``L_t`` vector of samples ``h^H x[l] + n[l]``.  All statistics below are
invariant to conjugating whole sequences, so this matches the row-vector
(Hermitian) notation often used for the same model.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .numerics import gauss_integral_power_cdf, std_normal_cdf, std_normal_quantile

if TYPE_CHECKING:
    from .channel import ChannelRealization
    from .powerctl import PowerSplit
    from .precoding import PrecoderSet

__all__ = [
    "TagKey",
    "HypothesisStats",
    "AuthDecision",
    "DegenerateGainError",
    "generate_tag",
    "generate_tags",
    "user_tag_estimate",
    "correlation_statistic",
    "authenticate",
    "user_hypothesis_stats",
    "detection_threshold",
    "detection_probability",
    "eve_tag_estimate",
    "eve_hypothesis_stats",
    "ml_decode_key",
    "key_detection_probability",
]

_TAG_DOMAIN = b"fpauth/tag/v1\x00"
_DECODE_CHUNK = 512


class DegenerateGainError(ZeroDivisionError):
    """The effective gain used for LS equalization is zero."""


@dataclass(frozen=True, order=True)
class TagKey:
    """Shared secret identified by its index in a finite key space."""

    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("key index must be non-negative")

    def to_bytes(self) -> bytes:
        return int(self.index).to_bytes(8, "big")


def _as_key(key) -> TagKey:
    return key if isinstance(key, TagKey) else TagKey(int(key))


def _data_hasher(data_symbols) -> "hashlib._Hash":
    s = np.ascontiguousarray(data_symbols, dtype="<c16")
    h = hashlib.sha256(_TAG_DOMAIN)
    h.update(len(s).to_bytes(8, "big"))
    h.update(s.tobytes())
    return h


def _tag_from_digest(digest: bytes, n: int) -> np.ndarray:
    g = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))
    z = g.standard_normal((n, 2))
    z *= math.sqrt(0.5)
    return z.view(np.complex128)[:, 0]


def generate_tag(data_symbols, key) -> np.ndarray:
    """Tag sequence for ``(data_symbols, key)``.

    A SHA-256 digest of the serialized data and the key bytes seeds a
    CN(0, 1) sequence of the same length as the data.  Any change of key or
    data yields an unrelated tag.
    """
    data_symbols = np.asarray(data_symbols)
    if data_symbols.ndim != 1 or data_symbols.size < 1:
        raise ValueError("data symbols must be a non-empty 1-D sequence")
    h = _data_hasher(data_symbols)
    h.update(_as_key(key).to_bytes())
    return _tag_from_digest(h.digest(), data_symbols.size)


def generate_tags(data_symbols, keys: Iterable) -> np.ndarray:
    """Tags for many keys over the same data, shape (n_keys, L_t)."""
    data_symbols = np.asarray(data_symbols)
    base = _data_hasher(data_symbols)
    rows = []
    for key in keys:
        h = base.copy()
        h.update(_as_key(key).to_bytes())
        rows.append(_tag_from_digest(h.digest(), data_symbols.size))
    if not rows:
        return np.empty((0, data_symbols.size), dtype=complex)
    return np.stack(rows)


@dataclass(frozen=True)
class HypothesisStats:
    """Mean and variance of a correlation statistic under H0 (wrong tag) and H1."""

    mu0: float
    var0: float
    mu1: float
    var1: float

    @property
    def sigma0(self) -> float:
        return math.sqrt(self.var0)

    @property
    def sigma1(self) -> float:
        return math.sqrt(self.var1)


@dataclass(frozen=True)
class AuthDecision:
    tau_b: float
    tau_0: float
    authentic: bool


def _stats_from_var0(L_t: int, var0: float) -> HypothesisStats:
    half = L_t / 2
    var1 = var0 + half
    # snap var0 so that var1 - var0 == L_t / 2 holds exactly in floating point
    return HypothesisStats(0.0, var1 - half, float(L_t), var1)


def _stats_from_excess(L_t: int, excess: float) -> HypothesisStats:
    return _stats_from_var0(L_t, (L_t / 2) * (1.0 + excess))


# ---------------------------------------------------------------------------
# legitimate user


def _user_gains(H, pre: "PrecoderSet", u: int):
    h = H[:, u]
    g = h.conj() @ pre.W  # h_u^H w_k for every k
    a = h.conj() @ pre.V  # h_u^H v_i for every i
    if g[u] == 0:
        raise DegenerateGainError(f"user {u} has zero effective gain h^H w")
    return g, a


def user_tag_estimate(received, realization: "ChannelRealization", precoders: "PrecoderSet",
                      split: "PowerSplit", u: int, data_symbols) -> np.ndarray:
    """Remove user ``u``'s own (perfectly decoded) data, then LS-equalize the tag."""
    received = np.asarray(received)
    data_symbols = np.asarray(data_symbols)
    if received.shape != data_symbols.shape:
        raise ValueError("received block and data symbols differ in length")
    g_uu = complex(realization.H[:, u].conj() @ precoders.W[:, u])
    if g_uu == 0:
        raise DegenerateGainError(f"user {u} has zero effective gain h^H w")
    residual = received - math.sqrt(split.P_Tx * split.P_s) * g_uu * data_symbols
    return residual / (math.sqrt(split.P_Tx * split.P_t) * g_uu)


def correlation_statistic(estimated, expected) -> float:
    """Real part of the inner product estimated^H expected."""
    estimated = np.asarray(estimated)
    expected = np.asarray(expected)
    if estimated.shape != expected.shape:
        raise ValueError(f"length mismatch: {estimated.shape} vs {expected.shape}")
    return float(np.vdot(estimated, expected).real)


def authenticate(estimated, expected, tau_0: float) -> AuthDecision:
    tau_b = correlation_statistic(estimated, expected)
    return AuthDecision(tau_b=tau_b, tau_0=float(tau_0), authentic=tau_b > tau_0)


def user_hypothesis_stats(realization: "ChannelRealization", precoders: "PrecoderSet",
                          split: "PowerSplit", u: int, sigma_n2: float, L_t: int) -> HypothesisStats:
    if not split.P_t > 0:
        raise ValueError("tag power fraction must be positive")
    g, a = _user_gains(realization.H, precoders, u)
    sig = split.P_t * abs(g[u]) ** 2
    mui = np.sum(np.abs(np.delete(g, u)) ** 2) / sig
    an = np.sum(np.abs(a) ** 2) / sig
    noise = sigma_n2 / (split.P_Tx * sig)
    return _stats_from_excess(L_t, float(mui + an + noise))


def detection_threshold(p_fa: float, sigma0: float) -> float:
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    return float(std_normal_quantile(1.0 - p_fa)) * sigma0


def detection_probability(stats: HypothesisStats, tau0: float) -> float:
    if not stats.var1 > 0:
        raise ValueError("var1 must be positive")
    # 1 - Phi(x) == Phi(-x), without cancellation in the upper tail
    return float(std_normal_cdf((stats.mu1 - tau0) / stats.sigma1))


# ---------------------------------------------------------------------------
# eavesdropper


def _eve_gains(H_e, pre: "PrecoderSet", u: int):
    geff = H_e.conj().T @ pre.W[:, u]  # H_e^H w_u, shape (M,)
    q = float(np.real(np.vdot(geff, geff)))
    if q == 0:
        raise DegenerateGainError(f"Eve sees zero gain on user {u}'s precoder")
    c = geff.conj() @ (H_e.conj().T @ pre.V)  # w_u^H H_e H_e^H v_i
    return geff, q, c


def eve_tag_estimate(received, realization: "ChannelRealization", precoders: "PrecoderSet",
                     split: "PowerSplit", u: int, data, tags) -> np.ndarray:
    """Eve's estimate of user ``u``'s tag from her (M, L_t) block.

    Eve is assumed to know every user's data and every other user's tag;
    row ``u`` of ``tags`` is never used.  The residual is combined along
    H_e^H w_u and LS-normalized.
    """
    received = np.asarray(received)
    data = np.asarray(data)
    tags = np.asarray(tags)
    K = precoders.W.shape[1]
    if data.shape[0] != K or tags.shape[0] != K or received.shape[1] != data.shape[1]:
        raise ValueError("inconsistent block shapes")
    H_e = realization.H_e
    geff, q, _ = _eve_gains(H_e, precoders, u)
    known = math.sqrt(split.P_s) * data + math.sqrt(split.P_t) * tags
    known[u] = math.sqrt(split.P_s) * data[u]
    residual = received - math.sqrt(split.P_Tx) * (H_e.conj().T @ precoders.W) @ known
    return (geff.conj() @ residual) / (math.sqrt(split.P_Tx * split.P_t) * q)


def eve_hypothesis_stats(realization: "ChannelRealization", precoders: "PrecoderSet",
                         split: "PowerSplit", u: int, sigma_n2: float, L_t: int) -> HypothesisStats:
    if not split.P_t > 0:
        raise ValueError("tag power fraction must be positive")
    _, q, c = _eve_gains(realization.H_e, precoders, u)
    an = np.sum(np.abs(c) ** 2) / (split.P_t * q * q)
    noise = sigma_n2 / (split.P_Tx * split.P_t * q)
    return _stats_from_excess(L_t, float(an + noise))


def ml_decode_key(estimated, data_symbols, key_space) -> int:
    """Index of the key whose tag correlates best with ``estimated``.

    ``key_space`` is either a key-space size or an iterable of keys.  Ties
    go to the earliest key.
    """
    keys = list(range(int(key_space))) if np.isscalar(key_space) else list(key_space)
    if not keys:
        raise ValueError("key space is empty")
    estimated = np.asarray(estimated)
    best, best_val = 0, -math.inf
    for start in range(0, len(keys), _DECODE_CHUNK):
        chunk = keys[start:start + _DECODE_CHUNK]
        scores = (generate_tags(data_symbols, chunk) @ estimated.conj()).real
        i = int(np.argmax(scores))
        if scores[i] > best_val:
            best, best_val = start + i, float(scores[i])
    return _as_key(keys[best]).index


def key_detection_probability(stats: HypothesisStats, key_space_size: int) -> float:
    return gauss_integral_power_cdf(stats.mu0, stats.sigma0, stats.mu1, stats.sigma1, key_space_size)
