"""Preprocessing ahead of CCA on high-dimensional data.

Nuisance effects are fitted on a training split and removed from both
splits, the training residuals define a PCA basis onto which the held-out
split is projected, and the held-out blocks are standardised. Directions
estimated on the reduced, standardised data are mapped back to the original
features with ``V @ diag(1 / sd) @ B``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bootstrap import CiTable
from .errors import DegenerateError, InvalidInputError, RankDeficiencyError
from .linalg import as_matrix
from .rng import substream

DEFAULT_COMPONENTS = 250


@dataclass(eq=False)
class PreprocessModel:
    nuisance_coef_x: np.ndarray | None
    nuisance_coef_y: np.ndarray | None
    pca_basis: np.ndarray | None
    column_sds: np.ndarray
    y_sds: np.ndarray | None = None
    r: int = DEFAULT_COMPONENTS

    def __post_init__(self):
        self.column_sds = np.asarray(self.column_sds, dtype=float)
        if np.any(~(self.column_sds > 0)):
            raise DegenerateError("column standard deviations must be strictly positive")
        if self.pca_basis is not None:
            V = np.asarray(self.pca_basis, dtype=float)
            if not np.allclose(V.T @ V, np.eye(V.shape[1]), rtol=0, atol=1e-8):
                raise InvalidInputError("PCA basis columns are not orthonormal")
            self.pca_basis = V

    def save(self, directory) -> None:
        from .io import write_json, write_matrix_csv

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        blocks = {
            "nuisance_coef_x": self.nuisance_coef_x,
            "nuisance_coef_y": self.nuisance_coef_y,
            "pca_basis": self.pca_basis,
            "column_sds": self.column_sds[None, :],
            "y_sds": None if self.y_sds is None else np.asarray(self.y_sds)[None, :],
        }
        present = []
        for name, M in blocks.items():
            if M is not None:
                write_matrix_csv(d / f"{name}.csv", M)
                present.append(name)
        write_json(d / "preprocess.json", {"r": self.r, "blocks": present})

    @classmethod
    def load(cls, directory) -> PreprocessModel:
        from .io import read_matrix_csv

        d = Path(directory)
        meta = json.loads((d / "preprocess.json").read_text())
        got = {name: read_matrix_csv(d / f"{name}.csv") for name in meta["blocks"]}
        return cls(
            got.get("nuisance_coef_x"),
            got.get("nuisance_coef_y"),
            got.get("pca_basis"),
            got["column_sds"][0],
            got["y_sds"][0] if "y_sds" in got else None,
            int(meta["r"]),
        )


def _check_nuisance_rank(W: np.ndarray) -> None:
    n, w = W.shape
    # full V is only needed (and cheap) when there are fewer rows than columns
    _, sv, Vt = np.linalg.svd(W, full_matrices=n < w)
    rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size and sv[0] > 0 else 0
    null = Vt[rank:].T
    if null.shape[1]:
        # columns carrying weight in some null-space vector take part in a dependency
        involved = [int(j) for j in np.flatnonzero(np.any(np.abs(null) > 1e-8, axis=1))]
        raise RankDeficiencyError(
            "W", W.shape[1] - null.shape[1], W.shape[1],
            f"nuisance matrix (training rows) is rank deficient; linearly dependent columns: {involved}",
        )


def residualize_nuisance(train, test):
    """Remove nuisance effects fitted on the training split from both splits.

    ``train`` and ``test`` are ``(X, Y, W)`` triples; ``W`` should include an
    intercept column. Returns ``(X1, Y1, X2, Y2, A_x, A_y)``.
    """
    X1, Y1, W1 = (as_matrix(a, n) for a, n in zip(train, ("X1", "Y1", "W1")))
    X2, Y2, W2 = (as_matrix(a, n) for a, n in zip(test, ("X2", "Y2", "W2")))
    if W1.shape[1] != W2.shape[1]:
        raise InvalidInputError("train and test nuisance matrices have different widths")
    _check_nuisance_rank(W1)
    A, *_ = np.linalg.lstsq(W1, np.hstack([X1, Y1]), rcond=None)
    Ax, Ay = A[:, : X1.shape[1]], A[:, X1.shape[1] :]
    return X1 - W1 @ Ax, Y1 - W1 @ Ay, X2 - W2 @ Ax, Y2 - W2 @ Ay, Ax, Ay


def pca_reduce(train_resid, test_resid, r: int = DEFAULT_COMPONENTS):
    """Project the test residuals onto the leading ``r`` right singular vectors of the train residuals.

    Returns ``(test_scores, V)`` with ``V`` of shape ``(d, r)``.
    """
    X1 = as_matrix(train_resid, "train residuals")
    X2 = as_matrix(test_resid, "test residuals")
    _, s, Vt = np.linalg.svd(X1, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    if not 1 <= r <= rank:
        raise InvalidInputError(f"requested {r} components but training residuals have rank {rank}")
    V = Vt[:r].T
    return X2 @ V, V


def standardize_columns(M, names=None):
    """Centre and scale columns to variance 1 (divisor ``N - 1``). Returns ``(M_std, sds)``."""
    M = as_matrix(M)
    sds = M.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(sds > 0))
    if bad.size:
        label = names[bad[0]] if names is not None else f"column {int(bad[0])}"
        raise DegenerateError(f"zero-variance {label}")
    return (M - M.mean(axis=0)) / sds, sds


def map_directions_to_original(B_hat, model: PreprocessModel, ci_table: CiTable | None = None) -> np.ndarray:
    """Original-feature directions ``V @ diag(1 / sd) @ B_hat``.

    With ``ci_table`` the entries of ``B_hat`` whose interval contains 0 are
    zeroed before mapping.
    """
    B = np.asarray(B_hat, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    r = model.column_sds.shape[0]
    if B.shape[0] != r:
        raise InvalidInputError(f"B_hat has {B.shape[0]} rows, expected {r}")
    if ci_table is not None:
        if ci_table.shape != B.shape:
            raise InvalidInputError(f"CI table shape {ci_table.shape} does not match B_hat {B.shape}")
        B = np.where(ci_table.contains_zero(), 0.0, B)
    scaled = B / model.column_sds[:, None]
    if model.pca_basis is None:
        return scaled
    if model.pca_basis.shape[1] != r:
        raise InvalidInputError("PCA basis width does not match the number of standard deviations")
    return model.pca_basis @ scaled


def split_halves(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = substream(seed).permutation(n)
    h = n // 2
    return np.sort(perm[:h]), np.sort(perm[h:])


def preprocess(X, Y, W=None, *, r: int | None = DEFAULT_COMPONENTS, split_seed: int = 0,
               train_index=None):
    """Full preprocessing; returns ``(X2, Y2, PreprocessModel)`` for the held-out split.

    ``W`` defaults to an intercept column. ``r=None`` skips PCA. ``train_index``
    overrides the seeded random half split.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    n = X.shape[0]
    if Y.shape[0] != n:
        raise InvalidInputError(f"X has {n} rows but Y has {Y.shape[0]}")
    W = np.ones((n, 1)) if W is None else as_matrix(W, "W")
    if W.shape[0] != n:
        raise InvalidInputError(f"W has {W.shape[0]} rows, expected {n}")
    if train_index is None:
        tr, te = split_halves(n, split_seed)
    else:
        tr = np.asarray(train_index, dtype=np.int64)
        te = np.setdiff1d(np.arange(n), tr)
    X1, _, X2, Y2, Ax, Ay = residualize_nuisance((X[tr], Y[tr], W[tr]), (X[te], Y[te], W[te]))
    V = None
    if r is not None:
        X2, V = pca_reduce(X1, X2, r)
    X2s, sds = standardize_columns(X2)
    Y2s, ysds = standardize_columns(Y2)
    model = PreprocessModel(Ax, Ay, V, sds, ysds, r if r is not None else X.shape[1])
    return X2s, Y2s, model
