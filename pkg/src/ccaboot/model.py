"""Generative covariance models that realise a prescribed CCA solution."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, RankDeficiencyError
from .linalg import numerical_rank, pinv_svd, sym_eig_desc, symmetrize


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Joint covariance of ``(x, y)`` stored by block.

    ``Sigma`` is assembled from the blocks on construction, so the blocks of
    ``Sigma`` always equal the stored ``SigmaX``, ``SigmaY`` and ``SigmaXY``.
    """

    SigmaX: np.ndarray
    SigmaY: np.ndarray
    SigmaXY: np.ndarray

    def __post_init__(self):
        Sx = np.atleast_2d(np.asarray(self.SigmaX, dtype=float))
        Sy = np.atleast_2d(np.asarray(self.SigmaY, dtype=float))
        Sxy = np.atleast_2d(np.asarray(self.SigmaXY, dtype=float))
        p, q = Sx.shape[0], Sy.shape[0]
        if Sx.shape != (p, p) or Sy.shape != (q, q) or Sxy.shape != (p, q):
            raise InvalidInputError(
                f"block shapes do not fit together: {Sx.shape}, {Sy.shape}, {Sxy.shape}"
            )
        object.__setattr__(self, "SigmaX", Sx)
        object.__setattr__(self, "SigmaY", Sy)
        object.__setattr__(self, "SigmaXY", Sxy)
        object.__setattr__(self, "Sigma", np.block([[Sx, Sxy], [Sxy.T, Sy]]))

    @property
    def p(self) -> int:
        return self.SigmaX.shape[0]

    @property
    def q(self) -> int:
        return self.SigmaY.shape[0]

    def min_relative_eigenvalue(self) -> float:
        w = np.linalg.eigvalsh(symmetrize(self.Sigma))
        return float(w.min() / w.max())

    def save(self, directory, *, K: int | None = None) -> None:
        """Write ``SigmaX.csv``, ``SigmaY.csv``, ``SigmaXY.csv`` and ``model.json``."""
        from .io import write_json, write_matrix_csv

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_matrix_csv(d / "SigmaX.csv", self.SigmaX)
        write_matrix_csv(d / "SigmaY.csv", self.SigmaY)
        write_matrix_csv(d / "SigmaXY.csv", self.SigmaXY)
        write_json(d / "model.json", {"p": self.p, "q": self.q, "K": K})

    @classmethod
    def load(cls, directory) -> CovarianceModel:
        from .io import read_matrix_csv

        d = Path(directory)
        meta = json.loads((d / "model.json").read_text())
        model = cls(
            read_matrix_csv(d / "SigmaX.csv"),
            read_matrix_csv(d / "SigmaY.csv"),
            read_matrix_csv(d / "SigmaXY.csv"),
        )
        if (model.p, model.q) != (meta["p"], meta["q"]):
            raise InvalidInputError(f"{d}: manifest dimensions do not match CSV blocks")
        return model


def inflate_trailing_eigenvalues(SigmaX, K: int, *, tol: float = 1e-8) -> np.ndarray:
    """Replace eigenvalues ``K+1..p`` by an open linear grid between ``lambda_K`` and 0.

    The ``j``-th trailing eigenvalue becomes ``lambda_K * (p-K+1-j) / (p-K+1)``.
    Eigenvectors are kept, so quadratic forms on the span of the leading ``K``
    eigenvectors are unchanged.
    """
    S = symmetrize(np.asarray(SigmaX, dtype=float))
    p = S.shape[0]
    if K >= p:
        return S.copy()
    w, V = sym_eig_desc(S)
    if w[0] <= 0 or w[:K].min() < -tol * abs(w[0]):
        raise InvalidInputError("leading eigenvalues must be positive")
    m = p - K
    new = w.copy()
    new[K:] = w[K - 1] * (m + 1 - np.arange(1, m + 1)) / (m + 1)
    return symmetrize((V * new) @ V.T)


def invert_cca_model(R, B, Gamma) -> CovarianceModel:
    """Build a joint covariance whose population CCA is ``(R, B, Gamma)``.

    ``R`` may be the vector of canonical correlations or its diagonal matrix.
    Requires ``p >= q = K``, full column rank directions and strictly
    decreasing correlations in ``(0, 1)``.
    """
    rho = np.asarray(R, dtype=float)
    if rho.ndim == 2:
        rho = np.diag(rho)
    B = np.asarray(B, dtype=float)
    G = np.asarray(Gamma, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if G.ndim == 1:
        G = G[:, None]
    K = rho.shape[0]
    p, q = B.shape[0], G.shape[0]
    if B.shape[1] != K or G.shape[1] != K:
        raise InvalidInputError(f"directions must have K={K} columns")
    if not (p >= q == K):
        raise InvalidInputError(f"need p >= q = K, got p={p}, q={q}, K={K}")
    if np.any(rho <= 0) or np.any(rho >= 1):
        raise InvalidInputError("canonical correlations must lie strictly inside (0, 1)")
    if np.any(np.diff(rho) >= 0):
        raise InvalidInputError("canonical correlations must be strictly decreasing")
    for name, M in (("B", B), ("Gamma", G)):
        r = numerical_rank(M)
        if r < K:
            raise RankDeficiencyError(name, r, K)

    Ginv = np.linalg.inv(G)
    Sy = Ginv.T @ Ginv
    if p == K:
        Binv = np.linalg.inv(B)
        Sx = Binv.T @ Binv
    else:
        Bp = pinv_svd(B)
        Sx = inflate_trailing_eigenvalues(Bp.T @ Bp, K)
    Sxy = Sx @ B @ np.diag(rho) @ G.T @ Sy
    return CovarianceModel(Sx, Sy, Sxy)
