"""RZF data precoding, null-space artificial-noise precoding, SINR and sum rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "PrecoderSet",
    "rzf_precoder",
    "normalize_data_precoder",
    "an_precoder",
    "normalize_an_precoder",
    "build_precoders",
    "sinr",
    "sinr_all",
    "sum_rate",
]

NULL_RCOND = 1e-10


def _check_phi(phi: float) -> None:
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"power splitting factor must lie in [0, 1], got {phi}")


def rzf_precoder(H: np.ndarray, beta: float) -> np.ndarray:
    """Unnormalized RZF directions ``(H H^H + beta I)^-1 H``.

    Evaluated through the equivalent K x K form ``H (H^H H + beta I)^-1`` so
    that ``beta = 0`` gives the zero-forcing pseudo-inverse direction.
    """
    H = np.asarray(H)
    N, K = H.shape
    if K >= N:
        raise ValueError(f"RZF needs more antennas than users (N={N}, K={K})")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    G = H.conj().T @ H + beta * np.eye(K)
    if beta == 0 and np.linalg.matrix_rank(G) < K:
        raise np.linalg.LinAlgError("H^H H is singular; zero-forcing is undefined")
    return H @ np.linalg.inv(G)


def normalize_data_precoder(W_tilde: np.ndarray, phi: float, K: int | None = None) -> np.ndarray:
    """Scale every column to squared norm ``phi / K``."""
    _check_phi(phi)
    K = W_tilde.shape[1] if K is None else K
    norms2 = np.sum(np.abs(W_tilde) ** 2, axis=0)
    if np.any(norms2 == 0):
        raise ValueError("cannot normalize a zero precoder column")
    return W_tilde * np.sqrt(phi / (K * norms2))


def an_precoder(H: np.ndarray, Z: int | None = None) -> np.ndarray:
    """Orthonormal basis of null(H^H), truncated to the first ``Z`` columns."""
    H = np.asarray(H)
    N, K = H.shape
    if K >= N:
        raise ValueError(f"null space of H^H is empty (N={N}, K={K})")
    V = scipy.linalg.null_space(H.conj().T, rcond=NULL_RCOND)
    if Z is None:
        return V
    if not 1 <= Z <= V.shape[1]:
        raise ValueError(f"Z={Z} exceeds the null-space dimension {V.shape[1]}")
    return V[:, :Z]


def normalize_an_precoder(V_tilde: np.ndarray, phi: float, Z: int | None = None) -> np.ndarray:
    _check_phi(phi)
    Z = V_tilde.shape[1] if Z is None else Z
    if Z < 1:
        raise ValueError("at least one AN column is required")
    norms2 = np.sum(np.abs(V_tilde) ** 2, axis=0)
    if np.any(norms2 == 0):
        raise ValueError("cannot normalize a zero AN column")
    return V_tilde * np.sqrt((1.0 - phi) / (Z * norms2))


@dataclass(frozen=True)
class PrecoderSet:
    """Power-normalized data (N x K) and AN (N x Z) precoders for a split ``phi``."""

    W: np.ndarray
    V: np.ndarray
    beta: float
    phi: float

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.W) ** 2) + np.sum(np.abs(self.V) ** 2))

    def with_phi(self, phi: float) -> "PrecoderSet":
        """Rescale to a new split; the directions are unchanged."""
        _check_phi(phi)
        w_scale = math.sqrt(phi / self.phi) if self.phi > 0 else None
        v_scale = math.sqrt((1 - phi) / (1 - self.phi)) if self.phi < 1 else None
        if w_scale is None or v_scale is None:
            raise ValueError("cannot rescale a precoder set with a degenerate split")
        return PrecoderSet(self.W * w_scale, self.V * v_scale, self.beta, phi)


def build_precoders(H: np.ndarray, phi: float, beta: float = 0.0, Z: int | None = None) -> PrecoderSet:
    K = H.shape[1]
    W = normalize_data_precoder(rzf_precoder(H, beta), phi, K)
    V_t = an_precoder(H, Z)
    V = normalize_an_precoder(V_t, phi, V_t.shape[1])
    return PrecoderSet(W=W, V=V, beta=float(beta), phi=float(phi))


def sinr_all(W: np.ndarray, V: np.ndarray, H: np.ndarray, P_s: float, rho: float,
             P_t: float = 0.0) -> np.ndarray:
    """SINR of every user.

    ``P_t`` > 0 additionally counts the superimposed tags (own and others')
    as interference; the default leaves them out.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    G = np.abs(H.conj().T @ W) ** 2  # G[u, k] = |h_u^H w_k|^2
    A = np.abs(H.conj().T @ V) ** 2 if V.size else np.zeros((H.shape[1], 0))
    signal = P_s * np.diag(G)
    mui = P_s * (G.sum(axis=1) - np.diag(G))
    tag = P_t * G.sum(axis=1)
    return signal / (mui + tag + A.sum(axis=1) + 1.0 / rho)


def sinr(u: int, W, V, H, P_s: float, rho: float, P_t: float = 0.0) -> float:
    return float(sinr_all(W, V, H, P_s, rho, P_t)[u])


def sum_rate(W, V, H, P_s: float, rho: float, P_t: float = 0.0) -> float:
    """Sum of log2(1 + SINR_k) over users, in bit/s/Hz."""
    return float(np.sum(np.log2(1.0 + sinr_all(W, V, H, P_s, rho, P_t))))
