"""Bootstrap confidence intervals for canonical directions (combootcca).

Each replicate resamples rows with replacement, re-estimates CCA, aligns the
result onto the full-data solution and stores the aligned directions.
Per-coordinate intervals are then read off the stored replicates.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from .align import Aligner, AlignmentStrategy
from .core import CcaSolution, cca_centered, column_sds, estimate_cca
from .errors import InvalidInputError, RankDeficiencyError
from .linalg import as_matrix
from .rng import substream

INTERVALS = ("percentile", "normal")
CHUNK = 64


@dataclass
class BootstrapConfig:
    n_boots: int = 10000
    alpha: float = 0.05
    interval: str = "percentile"
    strategy: str = "hungarian"
    seed: int = 0
    max_redraws: int = 100
    workers: int = 1

    def __post_init__(self):
        self.n_boots = int(self.n_boots)
        self.alpha = float(self.alpha)
        self.seed = int(self.seed)
        self.max_redraws = int(self.max_redraws)
        self.workers = int(self.workers)
        if self.n_boots < 2:
            raise InvalidInputError(f"n_boots must be >= 2, got {self.n_boots}")
        if not 0 < self.alpha < 1:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.interval not in INTERVALS:
            raise InvalidInputError(f"interval must be one of {INTERVALS}, got {self.interval!r}")
        self.strategy = AlignmentStrategy.parse(self.strategy).value
        if self.max_redraws < 0:
            raise InvalidInputError("max_redraws must be non-negative")
        if self.workers < 1:
            raise InvalidInputError("workers must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> BootstrapConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise InvalidInputError(f"unknown bootstrap config field(s): {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> BootstrapConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class CiTable:
    """Per-coordinate interval bounds and point estimates for a direction matrix."""

    lower: np.ndarray
    upper: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        pt = np.asarray(self.point, dtype=float)
        if not (lo.shape == hi.shape == pt.shape):
            raise InvalidInputError("lower, upper and point must share a shape")
        if np.any(lo > hi):
            raise InvalidInputError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "point", pt)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.point.shape

    def contains_zero(self) -> np.ndarray:
        return (self.lower <= 0) & (0 <= self.upper)

    def rows(self, block: str):
        """Yield ``(block, row, direction, point, lower, upper)`` tuples."""
        d, K = self.point.shape
        for i in range(d):
            for k in range(K):
                yield (block, i, k, float(self.point[i, k]), float(self.lower[i, k]), float(self.upper[i, k]))


CI_HEADER = ["block", "row", "direction", "point", "lower", "upper"]


def resample_rows(X, Y, rng: np.random.Generator):
    """Draw ``N`` paired rows uniformly with replacement."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    n = X.shape[0]
    if Y.shape[0] != n:
        raise InvalidInputError("X and Y must have the same number of rows")
    idx = rng.integers(0, n, size=n)
    return X[idx], Y[idx]


def _check_samples(samples: np.ndarray) -> None:
    if samples.shape[0] < 2:
        raise InvalidInputError("need at least two bootstrap samples")
    if not np.all(np.isfinite(samples)):
        raise InvalidInputError("bootstrap samples contain non-finite values")


def percentile_interval(samples, alpha: float):
    """Empirical ``alpha/2`` and ``1 - alpha/2`` quantiles along axis 0.

    Quantiles interpolate linearly between order statistics at position
    ``1 + (m - 1) * prob``. The upper bound is computed as the negated lower
    quantile of the negated samples, so negating the samples negates and swaps
    the bounds bit for bit.
    """
    s = np.asarray(samples, dtype=float)
    _check_samples(s)
    if not 0 < alpha <= 1:
        raise InvalidInputError(f"alpha must lie in (0, 1], got {alpha}")
    lo = np.quantile(s, alpha / 2, axis=0, method="linear")
    if alpha == 1:
        return lo, np.copy(lo)
    hi = -np.quantile(-s, alpha / 2, axis=0, method="linear")
    return lo, np.maximum(hi, lo)


def normal_interval(point, samples, alpha: float):
    """``point +/- z_{1-alpha/2} * sd(samples)`` with the sd taken along axis 0."""
    s = np.asarray(samples, dtype=float)
    _check_samples(s)
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    half = norm.ppf(1 - alpha / 2) * np.std(s, axis=0, ddof=1)
    point = np.asarray(point, dtype=float)
    return point - half, point + half


def interval_table(point, samples, alpha: float, interval: str) -> CiTable:
    if interval == "percentile":
        lo, hi = percentile_interval(samples, alpha)
    elif interval == "normal":
        lo, hi = normal_interval(point, samples, alpha)
    else:
        raise InvalidInputError(f"interval must be one of {INTERVALS}, got {interval!r}")
    return CiTable(lo, hi, point)


@dataclass(eq=False)
class BootstrapResult:
    """Reference solution, interval tables and the aligned replicate store.

    ``boot_B`` has shape ``(n_boots, p, K)``; ``boot_rho`` holds the replicate
    correlations permuted by the same alignment.
    """

    reference: CcaSolution
    ci_B: CiTable
    ci_Gamma: CiTable
    boot_B: np.ndarray
    boot_Gamma: np.ndarray
    boot_rho: np.ndarray
    config: BootstrapConfig
    n_redraws: int = 0
    warnings: list[str] = field(default_factory=list)

    def intervals(self, alpha: float | None = None, interval: str | None = None):
        """Recompute ``(ci_B, ci_Gamma)`` from the stored replicates."""
        alpha = self.config.alpha if alpha is None else alpha
        interval = self.config.interval if interval is None else interval
        return (
            interval_table(self.reference.B, self.boot_B, alpha, interval),
            interval_table(self.reference.Gamma, self.boot_Gamma, alpha, interval),
        )


class _ReplicateRunner:
    def __init__(self, X, Y, reference, config: BootstrapConfig):
        self.X = X
        self.Y = Y
        self.n = X.shape[0]
        self.config = config
        self.aligner = Aligner(reference, config.strategy, (column_sds(X), column_sds(Y)))

    def run(self, b: int):
        rng = substream(self.config.seed, b)
        n = self.n
        for attempt in range(self.config.max_redraws + 1):
            idx = rng.integers(0, n, size=n)
            Xs = self.X[idx]
            Ys = self.Y[idx]
            Xs -= Xs.mean(axis=0)
            Ys -= Ys.mean(axis=0)
            try:
                sol = cca_centered(Xs, Ys)
            except RankDeficiencyError:
                continue
            sds = (
                np.sqrt(np.einsum("ij,ij->j", Xs, Xs) / (n - 1)),
                np.sqrt(np.einsum("ij,ij->j", Ys, Ys) / (n - 1)),
            )
            t = self.aligner.transform(sol, sds)
            aligned = self.aligner.apply(sol, t)
            return aligned, attempt
        raise RankDeficiencyError(
            "resample",
            -1,
            -1,
            f"bootstrap replicate {b}: every one of {self.config.max_redraws + 1} draws was rank deficient",
        )

    def run_chunk(self, start: int, stop: int):
        return [self.run(b) for b in range(start, stop)]


def combootcca(X, Y, config: BootstrapConfig | None = None, **overrides) -> BootstrapResult:
    """Bootstrap confidence intervals for every coordinate of ``B`` and ``Gamma``.

    Keyword overrides are applied on top of ``config`` (for example
    ``combootcca(X, Y, n_boots=1000, seed=3)``). Replicate ``b`` always draws
    from substream ``(seed, b)``, so output is identical for any ``workers``.
    """
    if config is None:
        config = BootstrapConfig(**overrides)
    elif overrides:
        config = BootstrapConfig(**{**config.to_dict(), **overrides})
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    reference = estimate_cca(X, Y)
    runner = _ReplicateRunner(X, Y, reference, config)

    m = config.n_boots
    bounds = [(s, min(s + CHUNK, m)) for s in range(0, m, CHUNK)]
    if config.workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(lambda se: runner.run_chunk(*se), bounds))
    else:
        chunks = [runner.run_chunk(s, e) for s, e in bounds]
    results = [r for chunk in chunks for r in chunk]

    boot_B = np.stack([sol.B for sol, _ in results])
    boot_G = np.stack([sol.Gamma for sol, _ in results])
    boot_rho = np.stack([sol.rho for sol, _ in results])
    redraws = sum(a for _, a in results)
    ci_B = interval_table(reference.B, boot_B, config.alpha, config.interval)
    ci_G = interval_table(reference.Gamma, boot_G, config.alpha, config.interval)
    notes = []
    if config.strategy == AlignmentStrategy.PROCRUSTES.value:
        notes.append("procrustes alignment: replicate correlations left unpermuted")
    return BootstrapResult(reference, ci_B, ci_G, boot_B, boot_G, boot_rho, config, redraws, notes)
