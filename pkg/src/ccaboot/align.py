"""Alignment of resampled CCA solutions onto a reference solution.

Four strategies are available: ``identity`` (no-op), ``signflip`` (per-pair
sign correction), ``hungarian`` (permutation plus signs chosen by a
correlation-weighted assignment) and ``procrustes`` (separate orthogonal
rotations for each block). Transforms are always learned on
row-standardised directions and applied to the raw replicate directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import CcaSolution
from .errors import DegenerateError, InvalidInputError


class AlignmentStrategy(str, Enum):
    IDENTITY = "identity"
    SIGN_FLIP = "signflip"
    HUNGARIAN = "hungarian"
    PROCRUSTES = "procrustes"

    @classmethod
    def parse(cls, name) -> AlignmentStrategy:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"sign-flip": "signflip", "hungarian-weighted": "hungarian", "none": "identity"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise InvalidInputError(f"unknown alignment strategy {name!r} (choose from {choices})") from None


@dataclass(frozen=True, eq=False)
class AlignmentTransform:
    """How a replicate was mapped onto the reference.

    ``perm[k]`` is the replicate column placed at position ``k`` and
    ``signs[k]`` the sign applied to it afterwards, so the aligned directions
    are ``B_rep @ P @ H``. Procrustes transforms carry ``TB``/``TGamma``
    instead and leave ``perm``/``signs`` at the identity.
    """

    perm: np.ndarray
    signs: np.ndarray
    TB: np.ndarray | None = None
    TGamma: np.ndarray | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def P(self) -> np.ndarray:
        return permutation_matrix(self.perm)

    @property
    def H(self) -> np.ndarray:
        return np.diag(self.signs.astype(float))

    def is_identity(self, atol: float = 0.0) -> bool:
        K = self.perm.shape[0]
        ok = np.array_equal(self.perm, np.arange(K)) and np.all(self.signs == 1)
        for T in (self.TB, self.TGamma):
            if T is not None:
                ok = ok and np.allclose(T, np.eye(K), rtol=0, atol=atol)
        return bool(ok)


def permutation_matrix(perm) -> np.ndarray:
    """Matrix ``P`` with ``(M @ P)[:, k] = M[:, perm[k]]``."""
    perm = np.asarray(perm, dtype=np.int64)
    K = perm.shape[0]
    P = np.zeros((K, K))
    P[perm, np.arange(K)] = 1.0
    return P


def row_standardize_directions(D, sds, names=None) -> np.ndarray:
    """Multiply row ``i`` of a direction matrix by the SD of variable ``i``.

    This gives the directions that CCA would have produced on standardised
    data.
    """
    D = np.asarray(D, dtype=float)
    sds = np.asarray(sds, dtype=float)
    if sds.shape != (D.shape[0],):
        raise InvalidInputError(f"need {D.shape[0]} standard deviations, got shape {sds.shape}")
    bad = np.flatnonzero(~(sds > 0))
    if bad.size:
        i = int(bad[0])
        label = names[i] if names is not None else f"column {i}"
        raise DegenerateError(f"non-positive standard deviation for {label}")
    return D * sds[:, None]


def cosine_similarity_columns(A, Bm) -> np.ndarray:
    """``G[i, j]`` = cosine of the angle between ``A[:, i]`` and ``Bm[:, j]``."""
    A = np.asarray(A, dtype=float)
    Bm = np.asarray(Bm, dtype=float)
    if A.ndim != 2 or Bm.ndim != 2 or A.shape[0] != Bm.shape[0]:
        raise InvalidInputError(f"incompatible shapes {A.shape} and {Bm.shape}")
    for name, M in (("first", A), ("second", Bm)):
        zero = np.flatnonzero(~np.any(M != 0, axis=0))
        if zero.size:
            raise DegenerateError(f"{name} argument has a zero column at index {int(zero[0])}")
    return kernels.cosine_similarity(A, Bm)


def solve_assignment(score) -> np.ndarray:
    """Permutation maximising ``trace(score @ P)``.

    Returns ``perm`` with row ``i`` assigned to column ``perm[i]``, i.e.
    ``P = permutation_matrix(perm)`` has ``P[perm[i], i] = 1``.
    """
    S = np.asarray(score, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInputError(f"score matrix must be square, got {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInputError("score matrix has non-finite entries")
    return kernels.assignment_max(S)


class ProcrustesResult(NamedTuple):
    rotation: np.ndarray
    full_rank: bool


def procrustes_rotation(target, source) -> ProcrustesResult:
    """Orthogonal ``T`` minimising ``||target - source @ T||_F``.

    ``T = U @ Vt`` from the SVD of ``source.T @ target``. When that product
    is rank deficient the minimiser is not unique and ``full_rank`` is False.
    """
    target = np.asarray(target, dtype=float)
    source = np.asarray(source, dtype=float)
    if target.shape != source.shape or target.ndim != 2:
        raise InvalidInputError(f"shape mismatch: {target.shape} vs {source.shape}")
    U, s, Vt = np.linalg.svd(source.T @ target)
    full = bool(s.size and s[-1] > 1e-12 * max(s[0], 1e-300))
    return ProcrustesResult(U @ Vt, full)


def _signs_of(values: np.ndarray) -> np.ndarray:
    # exact zero resolves to +1
    return np.where(values < 0, -1.0, 1.0)


class Aligner:
    """Reference-side state for repeated alignment of replicates."""

    def __init__(self, reference: CcaSolution, strategy, sds_ref):
        self.reference = reference
        self.strategy = AlignmentStrategy.parse(strategy)
        sdx, sdy = sds_ref
        self.ref_B = row_standardize_directions(reference.B, sdx)
        self.ref_G = row_standardize_directions(reference.Gamma, sdy)
        self.sqrt_rho = np.sqrt(np.clip(reference.rho, 0.0, None))

    def transform(self, replicate: CcaSolution, sds_rep) -> AlignmentTransform:
        ref = self.reference
        if (replicate.p, replicate.q, replicate.K) != (ref.p, ref.q, ref.K):
            raise InvalidInputError("reference and replicate dimensions differ")
        K = ref.K
        ident = np.arange(K, dtype=np.int64)
        ones = np.ones(K)
        if self.strategy is AlignmentStrategy.IDENTITY:
            return AlignmentTransform(ident, ones)
        sdx, sdy = sds_rep
        rep_B = row_standardize_directions(replicate.B, sdx)
        rep_G = row_standardize_directions(replicate.Gamma, sdy)
        if self.strategy is AlignmentStrategy.PROCRUSTES:
            tb = procrustes_rotation(self.ref_B, rep_B)
            tg = procrustes_rotation(self.ref_G, rep_G)
            notes = ["canonical correlation matrix is generally no longer diagonal after rotation"]
            if not (tb.full_rank and tg.full_rank):
                notes.append("rank-deficient Procrustes cross-product; rotation not unique")
            return AlignmentTransform(ident, ones, tb.rotation, tg.rotation, tuple(notes))
        G = 0.5 * (
            cosine_similarity_columns(self.ref_B, rep_B)
            + cosine_similarity_columns(self.ref_G, rep_G)
        )
        if self.strategy is AlignmentStrategy.SIGN_FLIP:
            return AlignmentTransform(ident, _signs_of(np.diag(G)))
        Gw = self.sqrt_rho[:, None] * G * np.sqrt(np.clip(replicate.rho, 0.0, None))[None, :]
        perm = kernels.assignment_max(np.abs(Gw))
        return AlignmentTransform(perm, _signs_of(Gw[np.arange(K), perm]))

    def apply(self, replicate: CcaSolution, t: AlignmentTransform) -> CcaSolution:
        if t.TB is not None:
            return CcaSolution(replicate.rho.copy(), replicate.B @ t.TB, replicate.Gamma @ t.TGamma)
        return CcaSolution(
            replicate.rho[t.perm],
            replicate.B[:, t.perm] * t.signs,
            replicate.Gamma[:, t.perm] * t.signs,
        )


def align(reference: CcaSolution, replicate: CcaSolution, strategy, sds_ref, sds_rep):
    """Align ``replicate`` onto ``reference``.

    ``sds_ref`` and ``sds_rep`` are ``(x_sds, y_sds)`` pairs holding the column
    standard deviations of the data each solution was estimated from.

    Returns the aligned :class:`CcaSolution` and the :class:`AlignmentTransform`.
    """
    aligner = Aligner(reference, strategy, sds_ref)
    t = aligner.transform(replicate, sds_rep)
    return aligner.apply(replicate, t), t
