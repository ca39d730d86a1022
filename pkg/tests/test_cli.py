from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ccaboot.cli import main
from ccaboot.evaluate import SUMMARY_HEADER

SIM_CONFIG = {
    "designs": [{"kind": "sim1", "p": 4, "q": 4, "n": 150, "rho": [0.8]}],
    "n_reps": 2,
    "n_boots": 10,
    "methods": ["combootcca", "asymptotic"],
    "seed": 5,
}


@pytest.fixture
def data_files(tmp_path):
    rng = np.random.default_rng(3)
    Z = rng.standard_normal((60, 3))
    X = Z + rng.standard_normal((60, 3))
    Y = Z + rng.standard_normal((60, 3))
    np.savetxt(tmp_path / "x.csv", X, delimiter=",")
    np.savetxt(tmp_path / "y.csv", Y, delimiter=",")
    np.savetxt(tmp_path / "y2.csv", Y[:, :2], delimiter=",")
    return tmp_path


def read_ci(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for r in rows:
        out[(r["block"], int(r["row"]), int(r["direction"]))] = (float(r["lower"]), float(r["upper"]))
    return rows, out


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_smoke_and_repeatable(tmp_path):
    cfg = write_config(tmp_path, SIM_CONFIG)
    outs = []
    for name in ("a", "b"):
        (tmp_path / name).mkdir()
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
        outs.append({f: (tmp_path / name / f).read_bytes() for f in ("summary.csv", "manifest.json")})
    assert outs[0] == outs[1]
    lines = outs[0]["summary.csv"].decode().splitlines()
    assert lines[0] == ",".join(SUMMARY_HEADER)
    # 2 methods x 4 monitored coordinates x 6 metrics
    assert len(lines) == 1 + 2 * 4 * 6
    manifest = json.loads(outs[0]["manifest.json"])
    assert manifest["settings"]["seed"] == 5
    assert manifest["versions"]["numpy"] == np.__version__


def test_simulate_workers_identical(tmp_path):
    cfg = write_config(tmp_path, SIM_CONFIG)
    for name, w in (("w1", "1"), ("w2", "2")):
        (tmp_path / name).mkdir()
        assert main(["simulate", "--config", str(cfg), "--workers", w, "--out", str(tmp_path / name)]) == 0
    for f in ("summary.csv", "manifest.json"):
        assert (tmp_path / "w1" / f).read_bytes() == (tmp_path / "w2" / f).read_bytes()


def test_flags_override_config(tmp_path):
    cfg = write_config(tmp_path, SIM_CONFIG)
    (tmp_path / "o").mkdir()
    assert main(["simulate", "--config", str(cfg), "--seed", "9", "--out", str(tmp_path / "o")]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["settings"]["seed"] == 9 and manifest["settings"]["n_boots"] == 10


def test_missing_output_dir(tmp_path, capsys):
    cfg = write_config(tmp_path, SIM_CONFIG)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "absent")]) == 1
    assert "out" in capsys.readouterr().err
    assert not (tmp_path / "absent").exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["cfg.json"]


def test_invalid_config_names_field(tmp_path, capsys):
    (tmp_path / "o").mkdir()
    bad = dict(SIM_CONFIG, designs=[{"kind": "sim1", "p": 4, "q": 4, "rho": [0.8], "shape": 1}])
    cfg = write_config(tmp_path, bad)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "designs" in capsys.readouterr().err
    cfg = write_config(tmp_path, dict(SIM_CONFIG, methods=["bayes"]))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "methods" in capsys.readouterr().err
    assert list((tmp_path / "o").iterdir()) == []


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--strategy", "varimax"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_infer_smoke(data_files):
    out = data_files / "out"
    out.mkdir()
    args = ["infer", "--x", str(data_files / "x.csv"), "--y", str(data_files / "y.csv"),
            "--n-boots", "200", "--out", str(out)]
    assert main(args) == 0
    assert sorted(p.name for p in out.iterdir()) == ["ci_combootcca.csv", "estimates.csv", "manifest.json"]
    rows, ci = read_ci(out / "ci_combootcca.csv")
    assert len(rows) == 18
    assert {k for k in ci if k[0] == "B"} == {("B", i, k) for i in range(3) for k in range(3)}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"]["ci_combootcca.csv"]["method"] == "combootcca"
    assert len(manifest["input_sha256"]["x"]) == 64


def test_infer_alpha_narrows(data_files):
    tables = {}
    for alpha in ("0.05", "0.1"):
        out = data_files / alpha
        out.mkdir()
        assert main(["infer", "--x", str(data_files / "x.csv"), "--y", str(data_files / "y.csv"),
                     "--n-boots", "200", "--alpha", alpha, "--seed", "2", "--out", str(out)]) == 0
        tables[alpha] = read_ci(out / "ci_combootcca.csv")[1]
    for key, (lo, hi) in tables["0.1"].items():
        wlo, whi = tables["0.05"][key]
        assert wlo <= lo and hi <= whi
        assert (hi - lo) < (whi - wlo)


def test_infer_asymptotic_warning(data_files, capsys):
    out = data_files / "o"
    out.mkdir()
    assert main(["infer", "--x", str(data_files / "x.csv"), "--y", str(data_files / "y2.csv"),
                 "--methods", "asymptotic,regression", "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "warning" in err and "p == q" in err
    assert (out / "ci_asymptotic.csv").exists() and (out / "ci_regression.csv").exists()


def test_infer_row_mismatch(data_files, capsys):
    np.savetxt(data_files / "short.csv", np.ones((10, 2)), delimiter=",")
    out = data_files / "o"
    out.mkdir()
    assert main(["infer", "--x", str(data_files / "x.csv"), "--y", str(data_files / "short.csv"),
                 "--out", str(out)]) != 0
    assert "rows" in capsys.readouterr().err
    assert list(out.iterdir()) == []


def test_infer_missing_input(data_files, capsys):
    out = data_files / "o"
    out.mkdir()
    assert main(["infer", "--x", str(data_files / "nope.csv"), "--y", str(data_files / "y.csv"),
                 "--out", str(out)]) == 1
    assert "'x'" in capsys.readouterr().err


def test_infer_method_failure_is_runtime_error(data_files, capsys):
    out = data_files / "o"
    out.mkdir()
    X = np.random.default_rng(0).standard_normal((11, 4))
    np.savetxt(data_files / "sx.csv", X, delimiter=",")
    np.savetxt(data_files / "sy.csv", X[:, :3] + 1, delimiter=",")
    assert main(["infer", "--x", str(data_files / "sx.csv"), "--y", str(data_files / "sy.csv"),
                 "--methods", "regression", "--out", str(out)]) == 2
    assert "regression" in capsys.readouterr().err


def test_infer_with_pipeline(tmp_path):
    rng = np.random.default_rng(1)
    n = 200
    W = np.column_stack([np.ones(n), rng.standard_normal(n)])
    X = rng.standard_normal((n, 12)) + W @ rng.standard_normal((2, 12))
    Y = X[:, :2] + rng.standard_normal((n, 2))
    for name, M in (("x", X), ("y", Y), ("w", W)):
        np.savetxt(tmp_path / f"{name}.csv", M, delimiter=",", header="h," * (M.shape[1] - 1) + "h", comments="")
    out = tmp_path / "o"
    out.mkdir()
    assert main(["infer", "--x", str(tmp_path / "x.csv"), "--y", str(tmp_path / "y.csv"),
                 "--w", str(tmp_path / "w.csv"), "--header", "--components", "4",
                 "--n-boots", "50", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert "B_original.csv" in names and "B_original_thresholded.csv" in names
    lines = (out / "B_original.csv").read_text().splitlines()
    assert len(lines) == 1 + 12


def test_report_merge(tmp_path, capsys):
    cfg = write_config(tmp_path, SIM_CONFIG)
    cfg2 = write_config(tmp_path, dict(SIM_CONFIG, methods=["regression"]), "cfg2.json")
    for name, c in (("a", cfg), ("b", cfg2)):
        (tmp_path / name).mkdir()
        assert main(["simulate", "--config", str(c), "--out", str(tmp_path / name)]) == 0
    a = tmp_path / "a" / "summary.csv"
    b = tmp_path / "b" / "summary.csv"
    (tmp_path / "r1").mkdir()
    assert main(["report", str(a), "--out", str(tmp_path / "r1")]) == 0
    assert (tmp_path / "r1" / "report.csv").read_text() == a.read_text()
    (tmp_path / "r2").mkdir()
    assert main(["report", str(a), str(b), "--out", str(tmp_path / "r2"), "--text"]) == 0
    n = lambda p: len(p.read_text().splitlines()) - 1  # noqa: E731
    assert n(tmp_path / "r2" / "report.csv") == n(a) + n(b)
    assert "coverage" in capsys.readouterr().out
    # identical duplicates merge silently
    assert main(["report", str(a), str(a), "--out", str(tmp_path / "r1")]) == 0


def test_report_column_order_and_errors(tmp_path, capsys):
    cfg = write_config(tmp_path, SIM_CONFIG)
    (tmp_path / "a").mkdir()
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    src = tmp_path / "a" / "summary.csv"
    with open(src) as fh:
        rows = list(csv.DictReader(fh))
    cols = list(reversed(SUMMARY_HEADER))
    shuffled = tmp_path / "shuffled.csv"
    with open(shuffled, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    (tmp_path / "r").mkdir()
    assert main(["report", str(shuffled), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "report.csv").read_text() == src.read_text()

    conflict = tmp_path / "conflict.csv"
    rows[0]["value"] = "0.123"
    with open(conflict, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    assert main(["report", str(src), str(conflict)]) == 2
    assert "conflicting" in capsys.readouterr().err

    bad = tmp_path / "bad.csv"
    bad.write_text("method,value\nx,1\n")
    assert main(["report", str(bad)]) != 0
    assert "bad.csv" in capsys.readouterr().err


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ccaboot.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "ccaboot" in r.stdout
