"""Symmetric eigendecomposition and PSD matrix powers.

Every estimator reduces to eigenvectors of products of fractional powers of
Gram matrices, so these three routines are the only linear-algebra backend.
Eigenvalues are clipped at zero before powering: Gaussian Gram matrices are
PSD in exact arithmetic and small negatives are roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EigenPair", "sym_eig", "psd_power", "ridge_inv_power"]


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues sorted descending with matching orthonormal eigenvectors."""

    values: np.ndarray  # (n,)
    vectors: np.ndarray  # (n, n), column i pairs with values[i]


def sym_eig(a) -> EigenPair:
    """Full eigendecomposition of a symmetric matrix, values descending.

    The input is symmetrized as (A + A^T)/2 first; inputs asymmetric beyond
    roundoff are rejected.  Each eigenvector is sign-normalized so its
    largest-magnitude entry is positive, making outputs reproducible across
    LAPACK backends.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > 1e-8 * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    sym = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(sym)  # LinAlgError on non-convergence
    w = w[::-1].copy()
    v = v[:, ::-1]
    pivot = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivot, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return EigenPair(values=w, vectors=v * signs)


def psd_power(a, alpha: float) -> np.ndarray:
    """A^alpha for symmetric PSD A, negative eigenvalues clipped to 0."""
    e = sym_eig(a)
    w = np.clip(e.values, 0.0, None) ** alpha
    return (e.vectors * w) @ e.vectors.T


def ridge_inv_power(a, eps: float, alpha: float) -> np.ndarray:
    """(A + eps*I)^(-alpha) for symmetric PSD A, a regularized inverse power."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    e = sym_eig(a)
    w = (np.clip(e.values, 0.0, None) + eps) ** (-alpha)
    return (e.vectors * w) @ e.vectors.T
