"""Competitor interval methods: Anderson asymptotics and split-sample regression."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, t as student_t

from .bootstrap import CiTable
from .core import estimate_cca
from .errors import DegenerateError, InvalidInputError, RankDeficiencyError
from .linalg import as_matrix
from .rng import substream

GAP_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class AsymptoticVariances:
    varB: np.ndarray
    varGamma: np.ndarray


def anderson_variance(D: np.ndarray, rho: np.ndarray, notes: list[str] | None = None) -> np.ndarray:
    """Per-coordinate limiting variances of a direction matrix.

    ``var[i, j] = D[i, j]**2 / 2 + (1 - r_j**2) * sum_{k != j}
    (r_k**2 + r_j**2 - 2 r_k**2 r_j**2) / (r_j**2 - r_k**2)**2 * D[i, k]**2``

    Squared gaps below ``GAP_FLOOR`` are clamped and reported in ``notes``.
    """
    D = np.asarray(D, dtype=float)
    r2 = np.asarray(rho, dtype=float) ** 2
    K = r2.shape[0]
    gap = (r2[:, None] - r2[None, :]) ** 2  # gap[j, k]
    small = np.abs(r2[:, None] - r2[None, :]) < GAP_FLOOR
    np.fill_diagonal(small, False)
    if small.any() and notes is not None:
        pairs = [(int(j), int(k)) for j, k in zip(*np.nonzero(small)) if j < k]
        notes.append(f"near-degenerate canonical correlation gap(s) at {pairs}; denominator clamped")
    gap = np.where(small, GAP_FLOOR**2, gap)
    num = r2[None, :] + r2[:, None] - 2.0 * r2[None, :] * r2[:, None]  # num[j, k]
    W = np.zeros((K, K))
    off = ~np.eye(K, dtype=bool)
    W[off] = num[off] / gap[off]
    # W[j, k]; var[i, j] = sum_k D[i, k]^2 W[j, k]
    cross = (D**2) @ W.T
    return 0.5 * D**2 + (1.0 - r2)[None, :] * cross


def asymptotic_ci(X, Y, alpha: float = 0.05):
    """Anderson's normal-theory intervals with plug-in estimates.

    Returns ``(ci_B, ci_Gamma, notes)``. The theory assumes ``p == q``; a note
    (and a :class:`UserWarning`) is emitted otherwise.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    sol = estimate_cca(X, Y)
    n = X.shape[0]
    notes: list[str] = []
    if sol.p != sol.q:
        notes.append(
            f"asymptotic intervals assume p == q (got p={sol.p}, q={sol.q}); coverage is not guaranteed"
        )
    var = AsymptoticVariances(
        anderson_variance(sol.B, sol.rho, notes), anderson_variance(sol.Gamma, sol.rho)
    )
    z = norm.ppf(1 - alpha / 2)
    tables = []
    for point, v in ((sol.B, var.varB), (sol.Gamma, var.varGamma)):
        half = z * np.sqrt(v / n)
        tables.append(CiTable(point - half, point + half, point))
    for msg in notes:
        warnings.warn(msg, UserWarning, stacklevel=2)
    return tables[0], tables[1], notes


def split_indices(n: int, split_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniformly random partition into halves of size ``floor(n/2)`` and ``ceil(n/2)``."""
    perm = substream(split_seed).permutation(n)
    h = n // 2
    return np.sort(perm[:h]), np.sort(perm[h:])


def _ols_direction_ci(response: np.ndarray, design: np.ndarray, tq: float):
    """Regress ``response`` on ``design``, rescale to unit variance, return (point, half-width)."""
    n2, d = design.shape
    XtX = design.T @ design
    try:
        chol = np.linalg.cholesky(XtX)
    except np.linalg.LinAlgError:
        raise RankDeficiencyError("regression design", np.linalg.matrix_rank(design), d) from None
    coef = np.linalg.solve(XtX, design.T @ response)
    resid = response - design @ coef
    sigma2 = resid @ resid / (n2 - d)
    quad = coef @ (XtX / (n2 - 1)) @ coef
    if not quad > 0:
        raise DegenerateError("fitted canonical variate has zero variance")
    c = quad**-0.5
    Linv = np.linalg.inv(chol)
    diag_inv = np.einsum("ij,ij->j", Linv, Linv)
    se = c * np.sqrt(sigma2 * diag_inv)
    return c * coef, tq * se


def regression_ci(X, Y, alpha: float = 0.05, split_seed: int = 0):
    """Split-sample regression intervals.

    CCA on one half supplies ``Gamma_1`` and ``B_1``; on the other half each
    variate ``Y2 @ Gamma_1[:, k]`` is regressed on ``X2`` (and ``X2 @ B_1[:, k]``
    on ``Y2``). Coefficients are rescaled to unit empirical variance and the
    OLS standard errors are rescaled by the same factor; t quantiles use
    ``n2 - p`` (``n2 - q``) degrees of freedom.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    n, p = X.shape
    q = Y.shape[1]
    if Y.shape[0] != n:
        raise InvalidInputError(f"X has {n} rows but Y has {Y.shape[0]}")
    if n < 2 * (max(p, q) + 2):
        raise InvalidInputError(f"regression intervals need N >= {2 * (max(p, q) + 2)}, got {n}")
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    i1, i2 = split_indices(n, split_seed)
    first = estimate_cca(X[i1], Y[i1])
    X2 = X[i2] - X[i2].mean(axis=0)
    Y2 = Y[i2] - Y[i2].mean(axis=0)
    n2 = X2.shape[0]
    K = first.K
    out = []
    for design, partner, dirs, d in ((X2, Y2, first.Gamma, p), (Y2, X2, first.B, q)):
        tq = student_t.ppf(1 - alpha / 2, n2 - d)
        pts = np.empty((d, K))
        half = np.empty((d, K))
        for k in range(K):
            pts[:, k], half[:, k] = _ols_direction_ci(partner @ dirs[:, k], design, tq)
        out.append(CiTable(pts - half, pts + half, pts))
    return out[0], out[1]
