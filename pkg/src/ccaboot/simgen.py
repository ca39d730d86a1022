"""Ground-truth generators for the three simulation designs and Gaussian sampling.

* Simulation I: one canonical pair, banded-precision (or identity) covariances.
* Simulation II: a second canonical pair supported on the complementary block.
* Simulation III: a dense solution (user supplied or synthetic) whose last
  coordinate of one direction is overwritten, with the covariance rebuilt by
  model inversion.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import CcaSolution, population_cca
from .errors import ContractViolation, InvalidInputError
from .linalg import symmetrize
from .model import CovarianceModel, invert_cca_model

KINDS = ("sim1", "sim2", "sim3")
REGIMES = ("dense", "sparse")
COVARIANCES = ("sparse-precision", "identity")
LEVELS = ("null", "mean-abs", "max-abs")
BLOCKS = ("B", "Gamma")


@dataclass(frozen=True)
class Coordinate:
    """A monitored entry of the ground-truth directions."""

    block: str
    direction: int
    index: int
    true_value: float
    is_null: bool


@dataclass
class SimDesign:
    """Parameters of one simulation cell.

    ``target`` and ``level`` only apply to ``kind="sim3"``; ``target`` is
    ``(block, direction)`` and the last coordinate of that direction is
    modified. ``base_seed`` seeds the synthetic Simulation III base solution
    when no base is supplied.
    """

    kind: str = "sim1"
    p: int = 10
    q: int = 10
    n: int = 1000
    rho: tuple[float, ...] = (0.9,)
    regime: str = "dense"
    covariance: str = "sparse-precision"
    level: str = "null"
    target: tuple[str, int] = ("B", 0)
    base_seed: int = 0
    id: str | None = None

    def __post_init__(self):
        self.rho = tuple(float(r) for r in np.atleast_1d(self.rho))
        self.target = (str(self.target[0]), int(self.target[1]))
        self.p, self.q, self.n = int(self.p), int(self.q), int(self.n)
        if self.kind not in KINDS:
            raise InvalidInputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.regime not in REGIMES:
            raise InvalidInputError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.covariance not in COVARIANCES:
            raise InvalidInputError(f"covariance must be one of {COVARIANCES}, got {self.covariance!r}")
        if self.level not in LEVELS:
            raise InvalidInputError(f"level must be one of {LEVELS}, got {self.level!r}")
        if self.target[0] not in BLOCKS:
            raise InvalidInputError(f"target block must be one of {BLOCKS}")
        if min(self.p, self.q, self.n) < 1:
            raise InvalidInputError("p, q and n must be positive")
        r = np.asarray(self.rho)
        if r.size == 0 or np.any(r <= 0) or np.any(r >= 1) or np.any(np.diff(r) >= 0):
            raise InvalidInputError(f"rho must be strictly decreasing in (0, 1), got {self.rho}")
        if self.kind != "sim3" and not self.p >= self.q >= len(self.rho):
            raise InvalidInputError("need p >= q >= len(rho)")
        if self.kind == "sim1" and len(self.rho) != 1:
            raise InvalidInputError("sim1 takes exactly one canonical correlation")
        if self.kind == "sim2" and len(self.rho) != 2:
            raise InvalidInputError("sim2 takes exactly two canonical correlations")
        if self.kind in ("sim1", "sim2") and self.regime == "sparse" and self.q < 3:
            raise InvalidInputError("sparse regime needs p, q >= 3")

    @property
    def design_id(self) -> str:
        if self.id:
            return self.id
        parts = [self.kind, f"p{self.p}", f"q{self.q}", f"n{self.n}", self.regime,
                 "rho" + "-".join(f"{r:g}" for r in self.rho)]
        if self.kind == "sim3":
            parts += [f"{self.target[0]}{self.target[1]}", self.level]
        return "_".join(parts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rho"] = list(self.rho)
        d["target"] = list(self.target)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SimDesign:
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown design field(s): {sorted(unknown)}")
        return cls(**d)


@dataclass(eq=False)
class GroundTruth:
    model: CovarianceModel
    solution: CcaSolution
    monitored: list[Coordinate] = field(default_factory=list)

    def save(self, directory) -> None:
        from .io import write_json, write_matrix_csv

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.model.save(d, K=self.solution.K)
        write_matrix_csv(d / "rho.csv", self.solution.rho[None, :])
        write_matrix_csv(d / "B.csv", self.solution.B)
        write_matrix_csv(d / "Gamma.csv", self.solution.Gamma)
        write_json(d / "truth.json", {"monitored": [asdict(c) for c in self.monitored]})

    @classmethod
    def load(cls, directory) -> GroundTruth:
        from .io import read_matrix_csv

        d = Path(directory)
        model = CovarianceModel.load(d)
        sol = CcaSolution(
            read_matrix_csv(d / "rho.csv")[0], read_matrix_csv(d / "B.csv"), read_matrix_csv(d / "Gamma.csv")
        )
        meta = json.loads((d / "truth.json").read_text())
        return cls(model, sol, [Coordinate(**c) for c in meta["monitored"]])


def build_precision(d: int, break_rows: bool = True, split: int | None = None) -> np.ndarray:
    """Banded precision ``1{i=j} + 0.5 1{|i-j|=1} + 0.4 1{|i-j|=2}``.

    With ``break_rows`` the off-diagonal entries of rows/columns ``split`` and
    ``split + 1`` (1-based; ``split`` defaults to ``d // 2``) are zeroed, which
    makes coordinates ``1..split`` independent of ``split+1..d``.
    """
    if d < 3:
        raise InvalidInputError(f"precision dimension must be >= 3, got {d}")
    i = np.arange(d)
    lag = np.abs(i[:, None] - i[None, :])
    omega = (lag == 0) + 0.5 * (lag == 1) + 0.4 * (lag == 2)
    omega = omega.astype(float)
    if break_rows:
        s = d // 2 if split is None else int(split)
        if not 1 <= s < d:
            raise InvalidInputError(f"split must lie in [1, {d - 1}], got {s}")
        for r in (s - 1, s):
            if r < d:
                omega[r, :] = 0.0
                omega[:, r] = 0.0
                omega[r, r] = 1.0
    if np.linalg.eigvalsh(omega).min() <= 0:
        raise ContractViolation("precision matrix is not positive definite")
    return omega


def _support(dim: int, regime: str, second: bool) -> np.ndarray:
    half = dim // 2 if regime == "dense" else 2
    v = np.zeros(dim)
    if second:
        v[half:] = 1.0
    else:
        v[:half] = 1.0
    return v


def _marginal_cov(dim: int, design: SimDesign) -> np.ndarray:
    if design.covariance == "identity":
        return np.eye(dim)
    split = dim // 2 if design.regime == "dense" else 2
    return symmetrize(np.linalg.inv(build_precision(dim, True, split)))


def _normalize(v: np.ndarray, S: np.ndarray) -> np.ndarray:
    return v / np.sqrt(v @ S @ v)


def _synthetic_truth(design: SimDesign, n_dirs: int) -> GroundTruth:
    p, q = design.p, design.q
    Sx = _marginal_cov(p, design)
    Sy = _marginal_cov(q, design)
    B = np.column_stack([_normalize(_support(p, design.regime, k == 1), Sx) for k in range(n_dirs)])
    G = np.column_stack([_normalize(_support(q, design.regime, k == 1), Sy) for k in range(n_dirs)])
    if n_dirs == 2:
        for name, D, S in (("B", B, Sx), ("Gamma", G, Sy)):
            c = D[:, 0] @ S @ D[:, 1]
            if abs(c) > 1e-8:
                raise ContractViolation(f"{name} directions are not orthogonal under the covariance ({c:.3g})")
    rho = np.asarray(design.rho)
    Sxy = Sx @ (B * rho) @ G.T @ Sy
    model = CovarianceModel(Sx, Sy, Sxy)
    sol = CcaSolution(rho, B, G)
    mon = []
    for k in range(n_dirs):
        # first direction: last coordinate null, first non-null; second the reverse
        null_idx_b, sig_idx_b = (p - 1, 0) if k == 0 else (0, p - 1)
        null_idx_g, sig_idx_g = (q - 1, 0) if k == 0 else (0, q - 1)
        for block, D, ni, si in (("B", B, null_idx_b, sig_idx_b), ("Gamma", G, null_idx_g, sig_idx_g)):
            mon.append(Coordinate(block, k, ni, float(D[ni, k]), True))
            mon.append(Coordinate(block, k, si, float(D[si, k]), False))
    return GroundTruth(model, sol, mon)


def build_sim1_truth(design: SimDesign) -> GroundTruth:
    if len(design.rho) != 1:
        raise InvalidInputError("Simulation I takes exactly one canonical correlation")
    return _synthetic_truth(design, 1)


def build_sim2_truth(design: SimDesign) -> GroundTruth:
    if len(design.rho) != 2:
        raise InvalidInputError("Simulation II takes exactly two canonical correlations")
    return _synthetic_truth(design, 2)


def synthetic_sim3_base(p: int, q: int, seed: int = 0) -> CcaSolution:
    """Stand-in for an empirical dense CCA solution with ``K = q`` directions.

    Correlations are a well separated leading value followed by a tightly
    spaced tail; directions are dense Gaussian.
    """
    if p < q:
        raise InvalidInputError("need p >= q")
    rng = np.random.default_rng(seed)
    tail = np.linspace(0.35, 0.05, q - 1) if q > 1 else np.array([])
    rho = np.concatenate([[0.6], tail])
    B = rng.standard_normal((p, q)) / np.sqrt(p)
    G = rng.standard_normal((q, q)) / np.sqrt(q)
    return CcaSolution(rho, B, G)


def sim3_base_from_model(model: CovarianceModel) -> CcaSolution:
    """Population solution of a (typically empirical) covariance, truncated to ``min(p, q)``."""
    return population_cca(model)


def build_sim3_truth(base: CcaSolution, target: tuple[str, int], level: str) -> GroundTruth:
    """Overwrite the last coordinate of one direction and rebuild the covariance.

    ``level`` is ``"null"`` (set to 0), ``"mean-abs"`` or ``"max-abs"`` (the
    mean / max of the absolute values of the other entries, keeping the
    original sign).
    """
    block, k = target
    if block not in BLOCKS:
        raise InvalidInputError(f"target block must be one of {BLOCKS}")
    if level not in LEVELS:
        raise InvalidInputError(f"level must be one of {LEVELS}")
    B = base.B.copy()
    G = base.Gamma.copy()
    D = B if block == "B" else G
    if not 0 <= k < D.shape[1]:
        raise InvalidInputError(f"direction {k} out of range")
    col = D[:, k]
    others = np.abs(col[:-1])
    sign = -1.0 if col[-1] < 0 else 1.0
    if level == "null":
        col[-1] = 0.0
    elif level == "mean-abs":
        col[-1] = sign * others.mean()
    else:
        col[-1] = sign * others.max()
    model = invert_cca_model(base.rho, B, G)
    sol = CcaSolution(base.rho.copy(), B, G)
    idx = D.shape[0] - 1
    mon = [Coordinate(block, int(k), idx, float(col[-1]), level == "null")]
    return GroundTruth(model, sol, mon)


def build_truth(design: SimDesign, base: CcaSolution | None = None) -> GroundTruth:
    if design.kind == "sim1":
        return build_sim1_truth(design)
    if design.kind == "sim2":
        return build_sim2_truth(design)
    if base is None:
        base = synthetic_sim3_base(design.p, design.q, design.base_seed)
    return build_sim3_truth(base, design.target, design.level)


def sample_mvn(model: CovarianceModel, n: int, rng: np.random.Generator):
    """``n`` draws from ``N(0, Sigma)`` split into ``(X, Y)``.

    Uses the symmetric square root of ``Sigma`` with negative eigenvalues
    clamped to zero.
    """
    S = symmetrize(model.Sigma)
    w, V = np.linalg.eigh(S)
    if w.min() < -1e-8 * w.max():
        raise InvalidInputError(f"Sigma is not PSD (min eigenvalue {w.min():.3g})")
    root = V * np.sqrt(np.clip(w, 0.0, None))
    Z = rng.standard_normal((int(n), S.shape[0]))
    D = Z @ root.T
    return D[:, : model.p], D[:, model.p :]
