"""Sample and population canonical correlation analysis.

The sample estimator follows the QR/SVD route (Bjorck and Golub): thin QR of
the centred blocks, SVD of ``Qx.T @ Qy``, then back-substitution through the
triangular factors. Directions are rescaled by ``sqrt(N - 1)`` so the
canonical variates have unit empirical variance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidInputError, RankDeficiencyError
from .linalg import as_matrix, sym_power

if TYPE_CHECKING:
    from .model import CovarianceModel

RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class CcaSolution:
    """Canonical correlations ``rho`` with direction matrices ``B`` (p x K) and ``Gamma`` (q x K)."""

    rho: np.ndarray
    B: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        B = np.asarray(self.B, dtype=float)
        G = np.asarray(self.Gamma, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if G.ndim == 1:
            G = G[:, None]
        if not (B.shape[1] == G.shape[1] == rho.shape[0]):
            raise InvalidInputError(
                f"inconsistent K: rho {rho.shape}, B {B.shape}, Gamma {G.shape}"
            )
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Gamma", G)

    @property
    def K(self) -> int:
        return int(self.rho.shape[0])

    @property
    def p(self) -> int:
        return int(self.B.shape[0])

    @property
    def q(self) -> int:
        return int(self.Gamma.shape[0])

    def truncate(self, k: int) -> CcaSolution:
        return CcaSolution(self.rho[:k].copy(), self.B[:, :k].copy(), self.Gamma[:, :k].copy())

    def flip(self, signs) -> CcaSolution:
        """Multiply direction pair ``k`` by ``signs[k]``."""
        s = np.asarray(signs, dtype=float)
        return CcaSolution(self.rho.copy(), self.B * s, self.Gamma * s)


@dataclass(frozen=True, eq=False)
class CanonicalVariates:
    C: np.ndarray
    D: np.ndarray


def center_columns(X) -> np.ndarray:
    """Subtract column means."""
    X = as_matrix(X, "X")
    return X - X.mean(axis=0)


def empirical_covariance(X, Y=None) -> np.ndarray:
    """Covariance with divisor ``N - 1`` (cross-covariance when ``Y`` is given)."""
    X = center_columns(X)
    Y = X if Y is None else center_columns(Y)
    return X.T @ Y / (X.shape[0] - 1)


def sign_convention(B: np.ndarray, Gamma: np.ndarray) -> np.ndarray:
    """Signs making the largest-magnitude entry of each Gamma column positive.

    Ties go to the lower index (``argmax`` returns the first maximiser).
    """
    idx = np.argmax(np.abs(Gamma), axis=0)
    vals = Gamma[idx, np.arange(Gamma.shape[1])]
    return np.where(vals < 0, -1.0, 1.0)


def _triangular_factor(Xc: np.ndarray, block: str) -> tuple[np.ndarray, np.ndarray]:
    Q, R = np.linalg.qr(Xc)
    d = np.abs(np.diag(R))
    top = d.max()
    if top == 0 or d.min() < RANK_RTOL * top:
        raise RankDeficiencyError(block, int(np.sum(d >= RANK_RTOL * top)), Xc.shape[1])
    return Q, R


def cca_centered(Xc: np.ndarray, Yc: np.ndarray) -> CcaSolution:
    """QR/SVD estimator on already centred blocks, without input validation.

    This is the per-replicate fast path used by the bootstrap.
    """
    n = Xc.shape[0]
    Qx, Rx = _triangular_factor(Xc, "X")
    Qy, Ry = _triangular_factor(Yc, "Y")
    U, s, Vt = np.linalg.svd(Qx.T @ Qy, full_matrices=False)
    scale = np.sqrt(n - 1.0)
    B = scale * solve_triangular(Rx, U, check_finite=False)
    G = scale * solve_triangular(Ry, Vt.T, check_finite=False)
    signs = sign_convention(B, G)
    return CcaSolution(np.clip(s, 0.0, 1.0), B * signs, G * signs)


def estimate_cca(X, Y) -> CcaSolution:
    """Sample CCA of paired data blocks.

    Returns ``K = min(p, q)`` canonical correlations and directions scaled so
    that ``B.T @ cov(X) @ B = I`` (divisor ``N - 1``). Each direction pair is
    sign-normalised so the largest-magnitude entry of ``Gamma[:, k]`` is
    positive.

    Raises
    ------
    RankDeficiencyError
        If either centred block has numerical rank below its column count.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    n = X.shape[0]
    if Y.shape[0] != n:
        raise InvalidInputError(f"X has {n} rows but Y has {Y.shape[0]}")
    if n < 2 or n <= max(X.shape[1], Y.shape[1]):
        raise InvalidInputError(
            f"need N > max(p, q); got N={n}, p={X.shape[1]}, q={Y.shape[1]}"
        )
    return cca_centered(X - X.mean(axis=0), Y - Y.mean(axis=0))


def population_cca(model: CovarianceModel) -> CcaSolution:
    """CCA of a known covariance structure via the SVD of the whitened cross-covariance."""
    Sx = np.asarray(model.SigmaX, dtype=float)
    Sy = np.asarray(model.SigmaY, dtype=float)
    Sxy = np.asarray(model.SigmaXY, dtype=float)
    if Sxy.shape != (Sx.shape[0], Sy.shape[0]):
        raise InvalidInputError(
            f"SigmaXY shape {Sxy.shape} incompatible with SigmaX {Sx.shape}, SigmaY {Sy.shape}"
        )
    Wx = sym_power(Sx, -0.5, name="SigmaX")
    Wy = sym_power(Sy, -0.5, name="SigmaY")
    U, s, Vt = np.linalg.svd(Wx @ Sxy @ Wy, full_matrices=False)
    B = Wx @ U
    G = Wy @ Vt.T
    signs = sign_convention(B, G)
    return CcaSolution(s, B * signs, G * signs)


def canonical_variates(X, Y, sol: CcaSolution) -> CanonicalVariates:
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise InvalidInputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if X.shape[1] != sol.p or Y.shape[1] != sol.q:
        raise InvalidInputError(
            f"data shapes ({X.shape[1]}, {Y.shape[1]}) do not match solution ({sol.p}, {sol.q})"
        )
    return CanonicalVariates(X @ sol.B, Y @ sol.Gamma)


def column_sds(X) -> np.ndarray:
    """Column standard deviations, divisor ``N - 1``."""
    return np.std(np.asarray(X, dtype=float), axis=0, ddof=1)
