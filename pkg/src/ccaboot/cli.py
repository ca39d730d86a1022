"""Command line interface: ``ccaboot simulate | infer | report``.

Settings come from ``--config`` (JSON) with command line flags taking
precedence; anything unset falls back to the defaults below. Exit status is
0 on success, 1 for usage/configuration errors and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np
import scipy

from . import __version__, kernels
from .align import AlignmentStrategy
from .baselines import asymptotic_ci, regression_ci
from .bootstrap import CI_HEADER, INTERVALS, BootstrapConfig, combootcca
from .core import estimate_cca
from .errors import InvalidInputError
from .evaluate import SUMMARY_HEADER, MethodSpec, run_replicates
from .io import commit_files, file_digest, format_float, json_text, read_matrix_csv, rows_to_csv_text
from .pipeline import map_directions_to_original, preprocess
from .simgen import SimDesign

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "alpha": 0.05,
    "n_boots": 10000,
    "strategy": "hungarian",
    "interval": "percentile",
    "max_redraws": 100,
}
SIMULATE_DEFAULTS = {"n_reps": 100, "methods": ["combootcca"], "designs": []}
INFER_DEFAULTS = {"methods": ["combootcca"], "header": False, "split_seed": 0, "pipeline": None}

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-boots", dest="n_boots", type=int)
    p.add_argument("--strategy", choices=[s.value for s in AlignmentStrategy])
    p.add_argument("--interval", choices=INTERVALS)
    p.add_argument("--out", type=Path, help="existing output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccaboot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="Monte-Carlo evaluation of interval methods")
    _add_common(sim)
    sim.add_argument("--n-reps", dest="n_reps", type=int)
    sim.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m])

    inf = sub.add_parser("infer", help="confidence intervals for CCA directions on data")
    _add_common(inf)
    inf.add_argument("--x", type=Path, help="CSV matrix for the first block")
    inf.add_argument("--y", type=Path, help="CSV matrix for the second block")
    inf.add_argument("--w", type=Path, help="CSV nuisance matrix (enables preprocessing)")
    inf.add_argument("--header", action="store_true", default=None, help="input CSVs have a header row")
    inf.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m])
    inf.add_argument("--components", type=int, help="PCA components kept by the preprocessing pipeline")

    rep = sub.add_parser("report", help="merge Monte-Carlo summary CSVs")
    rep.add_argument("inputs", nargs="*", type=Path)
    rep.add_argument("--config", type=Path)
    rep.add_argument("--out", type=Path)
    rep.add_argument("--text", action="store_true", help="print a plain-text summary")
    return parser


def resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults < config file < command line flags."""
    cfg = dict(DEFAULTS)
    cfg.update(defaults)
    if getattr(args, "config", None) is not None:
        if not args.config.is_file():
            raise UsageError(f"config file not found: {args.config}")
        try:
            loaded = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {args.config} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        cfg[key] = value
    return cfg


def _require_out(cfg: dict) -> Path:
    out = cfg.get("out")
    if out is None:
        raise UsageError("field 'out': an output directory is required")
    out = Path(out)
    if not out.is_dir():
        raise UsageError(f"field 'out': output directory does not exist: {out}")
    return out


def _bootstrap_config(cfg: dict) -> BootstrapConfig:
    try:
        return BootstrapConfig(
            n_boots=cfg["n_boots"], alpha=cfg["alpha"], interval=cfg["interval"],
            strategy=cfg["strategy"], seed=cfg["seed"], max_redraws=cfg["max_redraws"],
            workers=cfg["workers"],
        )
    except (InvalidInputError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid bootstrap settings: {exc}") from None


def _versions() -> dict:
    return {"ccaboot": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _manifest(command: str, cfg: dict, extra: dict) -> dict:
    # worker count does not affect results and is left out so manifests match across it
    settings = {k: v for k, v in cfg.items() if k not in ("workers", "out")}
    return {"command": command, "settings": settings, "versions": _versions(), **extra}


def run_simulate(cfg: dict) -> int:
    out = _require_out(cfg)
    boot = _bootstrap_config(cfg)
    try:
        designs = [SimDesign.from_dict(d) for d in cfg["designs"]]
    except (InvalidInputError, TypeError) as exc:
        raise UsageError(f"field 'designs': {exc}") from None
    if not designs:
        raise UsageError("field 'designs': at least one design is required")
    try:
        methods = [MethodSpec.parse(m).name for m in cfg["methods"]]
    except InvalidInputError as exc:
        raise UsageError(f"field 'methods': {exc}") from None
    n_reps = int(cfg["n_reps"])
    if n_reps < 1:
        raise UsageError("field 'n_reps': must be >= 1")
    summary = run_replicates(
        designs, methods, n_reps, boot.seed, n_boots=boot.n_boots, alpha=boot.alpha, workers=boot.workers
    )
    csv_text = summary.to_csv_text()
    cfg = {**cfg, "designs": [d.to_dict() for d in designs], "methods": methods}
    manifest = _manifest("simulate", cfg, {
        "design_ids": [d.design_id for d in designs],
        "failures": [
            {"method": f.method, "design_id": f.design_id, "replicate": f.replicate, "message": f.message}
            for f in summary.failures
        ],
    })
    commit_files(out, {"summary.csv": csv_text, "manifest.json": json_text(manifest)})
    for c in summary.cells:
        if not c.valid:
            print(f"warning: {c.method} on {c.design_id} failed in {c.failures} replicates; cell marked invalid",
                  file=sys.stderr)
    return EXIT_OK


def _read_input(cfg: dict, key: str, header: bool) -> tuple[np.ndarray, Path]:
    path = cfg.get(key)
    if path is None:
        raise UsageError(f"field '{key}': input CSV is required")
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"field '{key}': input file not found: {path}")
    return read_matrix_csv(path, header=header), path


def _ci_text(ci_B, ci_G) -> str:
    return rows_to_csv_text(CI_HEADER, [*ci_B.rows("B"), *ci_G.rows("Gamma")])


def run_infer(cfg: dict) -> int:
    out = _require_out(cfg)
    boot = _bootstrap_config(cfg)
    header = bool(cfg["header"])
    X, xpath = _read_input(cfg, "x", header)
    Y, ypath = _read_input(cfg, "y", header)
    digests = {"x": file_digest(xpath), "y": file_digest(ypath)}
    if X.shape[0] != Y.shape[0]:
        raise UsageError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    try:
        methods = [MethodSpec.parse(m) for m in cfg["methods"]]
    except InvalidInputError as exc:
        raise UsageError(f"field 'methods': {exc}") from None

    pipeline = cfg.get("pipeline") or {}
    if cfg.get("w") is not None or cfg.get("components") is not None:
        pipeline = {**pipeline, "enabled": True}
    if cfg.get("components") is not None:
        pipeline["components"] = cfg["components"]
    prep = None
    if pipeline.get("enabled"):
        W = None
        if cfg.get("w") is not None:
            W, wpath = _read_input(cfg, "w", header)
            digests["w"] = file_digest(wpath)
        X, Y, prep = preprocess(
            X, Y, W, r=pipeline.get("components"), split_seed=int(pipeline.get("split_seed", cfg["split_seed"]))
        )

    files: dict[str, str] = {}
    meta: dict[str, dict] = {}
    tables = {}
    for m in methods:
        try:
            if m.name == "combootcca":
                res = combootcca(X, Y, boot)
                ci_B, ci_G = res.ci_B, res.ci_Gamma
                notes = res.warnings
            elif m.kind == "boot":
                res = combootcca(X, Y, boot, strategy=m.strategy, interval=m.interval)
                ci_B, ci_G = res.ci_B, res.ci_Gamma
                notes = res.warnings
            elif m.kind == "asymptotic":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    ci_B, ci_G, notes = asymptotic_ci(X, Y, boot.alpha)
            else:
                ci_B, ci_G = regression_ci(X, Y, boot.alpha, int(cfg["split_seed"]))
                notes = []
        except InvalidInputError as exc:
            raise RuntimeError(f"method {m.name}: {exc}") from exc
        for note in notes:
            print(f"warning: {m.name}: {note}", file=sys.stderr)
        fname = f"ci_{m.name.replace(':', '_')}.csv"
        files[fname] = _ci_text(ci_B, ci_G)
        meta[fname] = {"method": m.name}
        tables[m.name] = (ci_B, ci_G)

    sol = estimate_cca(X, Y)
    est_rows = [("rho", 0, k, float(r)) for k, r in enumerate(sol.rho)]
    for block, D in (("B", sol.B), ("Gamma", sol.Gamma)):
        est_rows += [(block, i, k, float(D[i, k])) for i in range(D.shape[0]) for k in range(D.shape[1])]
    files["estimates.csv"] = rows_to_csv_text(["block", "row", "direction", "value"], est_rows)

    if prep is not None and prep.pca_basis is not None:
        orig = map_directions_to_original(sol.B, prep)
        files["B_original.csv"] = rows_to_csv_text(
            [f"direction_{k}" for k in range(orig.shape[1])], orig.tolist()
        )
        ci_name = methods[0].name
        thr = map_directions_to_original(sol.B, prep, tables[ci_name][0])
        files["B_original_thresholded.csv"] = rows_to_csv_text(
            [f"direction_{k}" for k in range(thr.shape[1])], thr.tolist()
        )
        meta["B_original_thresholded.csv"] = {"thresholded_by": ci_name}

    settings = {**cfg, "methods": [m.name for m in methods],
                "x": str(cfg["x"]), "y": str(cfg["y"]), "w": None if cfg.get("w") is None else str(cfg["w"])}
    manifest = _manifest("infer", settings, {
        "input_sha256": digests,
        "outputs": meta,
        "shape": {"n": int(X.shape[0]), "p": int(X.shape[1]), "q": int(Y.shape[1])},
    })
    files["manifest.json"] = json_text(manifest)
    commit_files(out, files)
    return EXIT_OK


def _read_summary(path: Path) -> list[dict]:
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or sorted(reader.fieldnames) != sorted(SUMMARY_HEADER):
            raise InvalidInputError(
                f"{path}: schema mismatch; expected columns {SUMMARY_HEADER}, got {reader.fieldnames}"
            )
        return list(reader)


def merge_summaries(paths: list[Path]) -> list[dict]:
    """Merge summary tables, keeping first-seen order; conflicting duplicates raise."""
    key_cols = ["method", "design_id", "block", "direction", "index", "metric"]
    merged: dict[tuple, dict] = {}
    origin: dict[tuple, Path] = {}
    for path in paths:
        for row in _read_summary(path):
            key = tuple(row[c] for c in key_cols)
            if key in merged:
                old = merged[key]
                same = (
                    old["n_reps"] == row["n_reps"]
                    and (old["value"] == row["value"] or _both_nan(old["value"], row["value"]))
                )
                if not same:
                    raise InvalidInputError(
                        f"{path}: conflicting values for {dict(zip(key_cols, key))} (also in {origin[key]})"
                    )
                continue
            merged[key] = row
            origin[key] = path
    return list(merged.values())


def _both_nan(a: str, b: str) -> bool:
    try:
        return np.isnan(float(a)) and np.isnan(float(b))
    except ValueError:
        return False


def _text_report(rows: list[dict]) -> str:
    lines = []
    width = max((len(r["method"]) for r in rows), default=6)
    for r in rows:
        if r["metric"] in ("failures", "valid"):
            continue
        lines.append(
            f"{r['method']:<{width}}  {r['design_id']}  {r['block']}[{r['index']},{r['direction']}]  "
            f"{r['metric']:<12} {float(r['value']):.4f}  (n={r['n_reps']})"
        )
    return "\n".join(lines) + "\n"


def run_report(cfg: dict) -> int:
    inputs = [Path(p) for p in cfg.get("inputs") or []]
    if not inputs:
        raise UsageError("field 'inputs': at least one summary CSV is required")
    out = _require_out(cfg) if cfg.get("out") is not None else None
    for p in inputs:
        if not p.is_file():
            raise UsageError(f"field 'inputs': file not found: {p}")
    rows = merge_summaries(inputs)
    text = rows_to_csv_text(SUMMARY_HEADER, ([r[c] for c in SUMMARY_HEADER] for r in rows))
    if out is not None:
        commit_files(out, {"report.csv": text})
    else:
        sys.stdout.write(text)
    if cfg.get("text"):
        sys.stdout.write(_text_report(rows))
    return EXIT_OK


COMMANDS = {
    "simulate": (run_simulate, SIMULATE_DEFAULTS),
    "infer": (run_infer, INFER_DEFAULTS),
    "report": (run_report, {}),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func, defaults = COMMANDS[args.command]
    try:
        cfg = resolve_config(args, defaults)
        return func(cfg)
    except UsageError as exc:
        print(f"ccaboot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - top-level diagnostic
        print(f"ccaboot {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
