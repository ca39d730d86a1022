"""Monte-Carlo evaluation of interval methods: coverage, length, power, bias."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .align import AlignmentStrategy
from .baselines import asymptotic_ci, regression_ci
from .bootstrap import INTERVALS, CiTable, combootcca
from .errors import ContractViolation, InvalidInputError
from .io import rows_to_csv_text
from .rng import derive_seed, substream
from .simgen import Coordinate, GroundTruth, SimDesign, build_truth, sample_mvn

MAX_FAILURE_RATE = 0.05
METRICS = ("coverage", "length", "rejection", "conservative", "failures", "valid")
SUMMARY_HEADER = ["method", "design_id", "block", "direction", "index", "metric", "value", "n_reps"]


@dataclass(frozen=True)
class MethodSpec:
    """An interval method by name.

    ``"combootcca"`` is the hungarian/percentile bootstrap; other bootstrap
    variants are written ``"boot:<strategy>:<interval>"``. ``"asymptotic"`` and
    ``"regression"`` select the baselines.
    """

    name: str
    kind: str
    strategy: str | None = None
    interval: str | None = None

    @classmethod
    def parse(cls, name: str) -> MethodSpec:
        if isinstance(name, MethodSpec):
            return name
        key = name.strip()
        if key == "combootcca":
            return cls(key, "boot", "hungarian", "percentile")
        if key in ("asymptotic", "regression"):
            return cls(key, key)
        if key.startswith("boot:"):
            parts = key.split(":")
            if len(parts) != 3 or parts[2] not in INTERVALS:
                raise InvalidInputError(f"bootstrap methods are 'boot:<strategy>:<interval>', got {name!r}")
            strategy = AlignmentStrategy.parse(parts[1]).value
            return cls(f"boot:{strategy}:{parts[2]}", "boot", strategy, parts[2])
        raise InvalidInputError(f"unknown method {name!r}")


def _covers(lo: float, hi: float, value: float) -> bool:
    return lo <= value <= hi


def coverage_with_sign_maximization(ci_B: CiTable, ci_Gamma: CiTable, truth: GroundTruth):
    """Coverage flags for the monitored coordinates after choosing signs per direction.

    For each direction ``k`` the sign ``s_k`` (applied to both ``beta_k`` and
    ``gamma_k``) maximising the number of covered monitored coordinates of
    that direction is used; ties keep ``+1``. Returns ``(covered, signs)``
    where ``signs`` maps direction to the chosen sign.
    """
    tables = {"B": ci_B, "Gamma": ci_Gamma}
    by_dir: dict[int, list[int]] = {}
    for pos, c in enumerate(truth.monitored):
        by_dir.setdefault(c.direction, []).append(pos)
    covered = [False] * len(truth.monitored)
    signs: dict[int, int] = {}
    for k, positions in by_dir.items():
        best_s, best_flags = 1, None
        for s in (1, -1):
            flags = []
            for pos in positions:
                c = truth.monitored[pos]
                t = tables[c.block]
                flags.append(_covers(t.lower[c.index, k], t.upper[c.index, k], s * c.true_value))
            if best_flags is None or sum(flags) > sum(best_flags):
                best_s, best_flags = s, flags
        signs[k] = best_s
        for pos, f in zip(positions, best_flags):
            covered[pos] = f
    return covered, signs


def rejection_flags(table: CiTable) -> np.ndarray:
    """True where 0 lies outside the closed interval."""
    return (table.lower > 0) | (table.upper < 0)


def conservative_flag(lower: float, upper: float, true_value: float) -> bool:
    """Whether a miss of a non-null value is shrunk toward zero.

    Only defined for a non-zero (sign-adjusted) truth that the interval misses.
    """
    if true_value == 0:
        raise ContractViolation("conservative flag is undefined for a null coordinate")
    if _covers(lower, upper, true_value):
        raise ContractViolation("conservative flag is undefined for a covering interval")
    return max(abs(lower), abs(upper)) < abs(true_value)


@dataclass(frozen=True)
class EvalRecord:
    method: str
    design_id: str
    replicate: int
    coordinate: Coordinate
    covered: bool
    length: float
    rejected: bool
    conservative: bool | None


@dataclass(frozen=True)
class Failure:
    method: str
    design_id: str
    replicate: int
    message: str


def evaluate_tables(method: str, design_id: str, rep: int, ci_B: CiTable, ci_Gamma: CiTable,
                    truth: GroundTruth) -> list[EvalRecord]:
    covered, signs = coverage_with_sign_maximization(ci_B, ci_Gamma, truth)
    tables = {"B": ci_B, "Gamma": ci_Gamma}
    out = []
    for c, cov in zip(truth.monitored, covered):
        t = tables[c.block]
        lo = float(t.lower[c.index, c.direction])
        hi = float(t.upper[c.index, c.direction])
        cons = None
        if not c.is_null and not cov:
            cons = conservative_flag(lo, hi, signs[c.direction] * c.true_value)
        out.append(EvalRecord(method, design_id, rep, c, bool(cov), hi - lo, not _covers(lo, hi, 0.0), cons))
    return out


def run_methods(X, Y, methods: list[MethodSpec], *, n_boots: int, alpha: float, boot_seed: int,
                split_seed: int):
    """Run every method on the same data; yields ``(method, tables or exception)``."""
    cache = {}
    for m in methods:
        try:
            if m.kind == "boot":
                if m.strategy not in cache:
                    cache[m.strategy] = combootcca(
                        X, Y, n_boots=n_boots, alpha=alpha, strategy=m.strategy, seed=boot_seed
                    )
                res = cache[m.strategy]
                yield m, res.intervals(alpha, m.interval)
            elif m.kind == "asymptotic":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    ci_B, ci_G, _ = asymptotic_ci(X, Y, alpha)
                yield m, (ci_B, ci_G)
            else:
                yield m, regression_ci(X, Y, alpha, split_seed)
        except Exception as exc:  # noqa: BLE001 - failures are recorded, not raised
            yield m, exc


def _replicate_task(args):
    d_idx, design, truth, rep, methods, seed, n_boots, alpha = args
    rng = substream(seed, d_idx, rep, 0)
    X, Y = sample_mvn(truth.model, design.n, rng)
    records: list[EvalRecord] = []
    failures: list[Failure] = []
    outs = run_methods(
        X, Y, methods, n_boots=n_boots, alpha=alpha,
        boot_seed=derive_seed(seed, d_idx, rep, 1), split_seed=derive_seed(seed, d_idx, rep, 2),
    )
    for m, res in outs:
        if isinstance(res, Exception):
            failures.append(Failure(m.name, design.design_id, rep, f"{type(res).__name__}: {res}"))
        else:
            records.extend(evaluate_tables(m.name, design.design_id, rep, res[0], res[1], truth))
    return records, failures


@dataclass
class CellSummary:
    method: str
    design_id: str
    coordinate: Coordinate
    coverage: float
    length: float
    rejection: float
    conservative: float
    n_reps: int
    failures: int
    valid: bool


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else math.nan


@dataclass
class EvalSummary:
    cells: list[CellSummary]
    records: list[EvalRecord] = field(default_factory=list)
    failures: list[Failure] = field(default_factory=list)

    def cell(self, method: str, design_id: str, block: str, direction: int, index: int) -> CellSummary:
        for c in self.cells:
            co = c.coordinate
            if (c.method, c.design_id, co.block, co.direction, co.index) == (method, design_id, block, direction, index):
                return c
        raise KeyError((method, design_id, block, direction, index))

    def tidy_rows(self):
        for c in self.cells:
            co = c.coordinate
            vals = {
                "coverage": c.coverage, "length": c.length, "rejection": c.rejection,
                "conservative": c.conservative, "failures": float(c.failures), "valid": float(c.valid),
            }
            for metric in METRICS:
                yield [c.method, c.design_id, co.block, co.direction, co.index, metric, vals[metric], c.n_reps]

    def to_csv_text(self) -> str:
        return rows_to_csv_text(SUMMARY_HEADER, self.tidy_rows())


def summarize(records: list[EvalRecord], failures: list[Failure], methods: list[str],
              designs: list[tuple[str, GroundTruth]], n_reps: int) -> EvalSummary:
    groups: dict[tuple, list[EvalRecord]] = {}
    for r in records:
        groups.setdefault((r.method, r.design_id, r.coordinate), []).append(r)
    fail_count: dict[tuple, int] = {}
    for f in failures:
        fail_count[(f.method, f.design_id)] = fail_count.get((f.method, f.design_id), 0) + 1
    cells = []
    for design_id, truth in designs:
        for m in methods:
            nf = fail_count.get((m, design_id), 0)
            for c in truth.monitored:
                rs = groups.get((m, design_id, c), [])
                cons = [r.conservative for r in rs if r.conservative is not None]
                cells.append(CellSummary(
                    m, design_id, c,
                    coverage=_mean([r.covered for r in rs]),
                    length=_mean([r.length for r in rs]),
                    rejection=_mean([r.rejected for r in rs]),
                    conservative=_mean(cons),
                    n_reps=len(rs),
                    failures=nf,
                    valid=nf <= MAX_FAILURE_RATE * n_reps,
                ))
    return EvalSummary(cells, records, failures)


def run_replicates(designs, methods, n_reps: int, seed: int, *, n_boots: int = 1000,
                   alpha: float = 0.05, workers: int = 1, bases: dict | None = None) -> EvalSummary:
    """Monte-Carlo evaluation of ``methods`` on each design.

    Replicate ``r`` of design ``d`` samples data from substream ``(seed, d, r)``
    and feeds the same data to every method; bootstrap variants sharing an
    alignment strategy reuse one set of replicates. Output is independent of
    ``workers``. Method failures are counted per cell and excluded from the
    rates; a cell with more than 5% failures is marked invalid.
    """
    designs = [d if isinstance(d, SimDesign) else SimDesign.from_dict(d) for d in designs]
    specs = [MethodSpec.parse(m) for m in methods]
    if n_reps < 1:
        raise InvalidInputError("n_reps must be >= 1")
    ids = [d.design_id for d in designs]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("design ids must be unique")
    bases = bases or {}
    truths = [build_truth(d, bases.get(d.design_id)) for d in designs]
    tasks = [
        (i, d, truths[i], r, specs, seed, n_boots, alpha)
        for i, d in enumerate(designs)
        for r in range(n_reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_replicate_task(t) for t in tasks]
    records = [r for rec, _ in results for r in rec]
    failures = [f for _, fl in results for f in fl]
    return summarize(records, failures, [s.name for s in specs], list(zip(ids, truths)), n_reps)
