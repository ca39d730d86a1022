"""Small dense linear algebra helpers shared by the CCA and model code."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, SingularCovarianceError


def symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def sym_eig_desc(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    w, V = np.linalg.eigh(symmetrize(np.asarray(A, dtype=float)))
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def sym_power(A: np.ndarray, power: float, *, name: str = "matrix", rtol: float = 1e-12) -> np.ndarray:
    """``A**power`` for a symmetric positive definite ``A`` via ``eigh``.

    Raises :class:`SingularCovarianceError` when the smallest eigenvalue is
    not above ``rtol`` times the largest.
    """
    w, V = np.linalg.eigh(symmetrize(np.asarray(A, dtype=float)))
    top = w.max() if w.size else 0.0
    if top <= 0 or w.min() <= rtol * top:
        raise SingularCovarianceError(
            f"{name} is not positive definite (eigenvalues in [{w.min():.3g}, {top:.3g}])"
        )
    return symmetrize((V * w**power) @ V.T)


def pinv_svd(A: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse; singular values below ``rtol * s_max`` count as zero."""
    U, s, Vt = np.linalg.svd(np.asarray(A, dtype=float), full_matrices=False)
    keep = s > rtol * (s[0] if s.size else 0.0)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def numerical_rank(A: np.ndarray, rtol: float = 1e-12) -> int:
    s = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array; 1-D input becomes a single column."""
    A = np.asarray(values, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return A
