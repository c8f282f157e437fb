"""Gaussian kernel evaluation, Gram matrices and the bandwidth heuristic.

All estimators in this package operate on three derived matrices per data
block: the raw Gram matrix ``K``, its doubly centered version ``G = Q K Q``
with ``Q = I - 11^T/n``, and the intercept-augmented ``L = (1, K)^T`` of
shape ``(n + 1, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KernelSpec",
    "GramBundle",
    "kernel_eval",
    "build_gram",
    "cross_kernel",
    "bandwidth_heuristic",
    "centering_matrix",
    "as_data_matrix",
]


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel k(x, x') = exp(-gamma * ||x - x'||^2)."""

    gamma: float
    family: str = "gaussian"

    def __post_init__(self) -> None:
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family: {self.family!r}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be a positive finite real, got {self.gamma}")


@dataclass(frozen=True)
class GramBundle:
    """Raw, centered and intercept-augmented Gram matrices of one data block."""

    K: np.ndarray  # (n, n) symmetric
    G: np.ndarray  # (n, n) = Q K Q
    L: np.ndarray  # (n + 1, n), row 0 all ones
    spec: KernelSpec = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.K.shape[0]


def as_data_matrix(values) -> np.ndarray:
    """Validate and return a dense (n, p) float matrix, rows = observations."""
    x = np.asarray(values, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"data must be 2-dimensional, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"data must be non-empty, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data contains non-finite values")
    return x


def centering_matrix(n: int) -> np.ndarray:
    """Q = I_n - 1 1^T / n."""
    return np.eye(n) - np.full((n, n), 1.0 / n)


def kernel_eval(x, x2, spec: KernelSpec) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    d = x - x2
    return float(np.exp(-spec.gamma * (d @ d)))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared euclidean distances between rows of a and b."""
    aa = np.sum(a * a, axis=1)
    bb = np.sum(b * b, axis=1)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.clip(d2, 0.0, None, out=d2)
    return d2


def build_gram(data, spec: KernelSpec) -> GramBundle:
    """Assemble K, G = QKQ and L = (1, K)^T for one data block."""
    x = as_data_matrix(data)
    n = x.shape[0]
    d2 = _sq_dists(x, x)
    # exact symmetry and unit diagonal, despite roundoff in the distance trick
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    k = np.exp(-spec.gamma * d2)
    q = centering_matrix(n)
    g = q @ k @ q
    ell = np.vstack([np.ones((1, n)), k])
    return GramBundle(K=k, G=g, L=ell, spec=spec)


def cross_kernel(train, x, spec: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Kernel sections h(x) = (k(x, X_1), ..., k(x, X_n)) and ell(x) = (1, h)."""
    xt = as_data_matrix(train)
    xv = np.asarray(x, dtype=float).ravel()
    if xv.shape[0] != xt.shape[1]:
        raise ValueError(
            f"dimension mismatch: point has {xv.shape[0]} entries, training data has {xt.shape[1]} columns"
        )
    d = xt - xv[None, :]
    h = np.exp(-spec.gamma * np.sum(d * d, axis=1))
    return h, np.concatenate([[1.0], h])


def cross_kernel_matrix(train, xnew, spec: KernelSpec) -> np.ndarray:
    """Kernel sections for many points at once: row j is h(xnew_j)."""
    xt = as_data_matrix(train)
    xn = as_data_matrix(xnew)
    if xn.shape[1] != xt.shape[1]:
        raise ValueError(
            f"dimension mismatch: expected {xt.shape[1]} columns, got {xn.shape[1]}"
        )
    return np.exp(-spec.gamma * _sq_dists(xn, xt))


def bandwidth_heuristic(data) -> float:
    """Inverse mean squared pairwise distance, gamma0 = 1 / mean_{i<j} ||z_i - z_j||^2."""
    x = as_data_matrix(data)
    n = x.shape[0]
    if n < 2:
        raise ValueError("bandwidth heuristic needs at least 2 observations")
    d2 = _sq_dists(x, x)
    iu = np.triu_indices(n, k=1)
    mean_sq = float(np.mean(d2[iu]))
    if mean_sq <= 0.0:
        raise ValueError("degenerate data: all observations identical")
    return 1.0 / mean_sq
