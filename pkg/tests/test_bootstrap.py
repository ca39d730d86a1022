from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from ccaboot import InvalidInputError, RankDeficiencyError
from ccaboot.bootstrap import (
    BootstrapConfig,
    CiTable,
    combootcca,
    normal_interval,
    percentile_interval,
    resample_rows,
)
from ccaboot.rng import substream

from .helpers import correlated_data


def sorted_interpolation(x, prob):
    """Order statistic at position 1 + (m - 1) * prob, linearly interpolated."""
    s = sorted(x)
    h = (len(s) - 1) * prob
    lo = int(np.floor(h))
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def test_config_defaults_and_validation(tmp_path):
    c = BootstrapConfig()
    assert (c.n_boots, c.alpha, c.interval, c.strategy, c.max_redraws) == (10000, 0.05, "percentile", "hungarian", 100)
    for bad in ({"n_boots": 1}, {"alpha": 0.0}, {"alpha": 1.0}, {"interval": "bca"}, {"strategy": "x"}):
        with pytest.raises(InvalidInputError):
            BootstrapConfig(**bad)
    with pytest.raises(InvalidInputError):
        BootstrapConfig.from_dict({"nboots": 5})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n_boots": 50, "strategy": "sign-flip"}))
    c = BootstrapConfig.from_json(path)
    assert c.n_boots == 50 and c.strategy == "signflip"


def test_resample_rows_pairing_and_determinism(rng):
    X = np.arange(10.0)[:, None]
    Y = 10 * X
    a = resample_rows(X, Y, substream(1, 0))
    b = resample_rows(X, Y, substream(1, 0))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], 10 * a[0])
    one = resample_rows(np.array([[3.0, 4.0]]), np.array([[5.0]]), rng)
    np.testing.assert_array_equal(one[0], [[3.0, 4.0]])


def test_resample_frequencies():
    X = np.arange(10.0)[:, None]
    r = substream(7)
    counts = np.zeros(10)
    for _ in range(10000):
        counts += np.bincount(resample_rows(X, X, r)[0][:, 0].astype(int), minlength=10)
    np.testing.assert_allclose(counts / counts.sum(), 0.1, atol=0.01)


def test_percentile_examples():
    lo, hi = percentile_interval(np.arange(1.0, 101.0), 0.05)
    assert lo == pytest.approx(3.475, abs=1e-12)
    assert hi == pytest.approx(97.525, abs=1e-12)
    lo, hi = percentile_interval(np.full(20, 2.5), 0.05)
    assert lo == hi == 2.5
    x = np.random.default_rng(0).standard_normal(51)
    lo, hi = percentile_interval(x, 1.0)
    assert lo == hi == np.median(x)
    with pytest.raises(InvalidInputError):
        percentile_interval(np.array([1.0, np.nan]), 0.05)
    with pytest.raises(InvalidInputError):
        percentile_interval(np.array([1.0]), 0.05)


@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 300), alpha=st.floats(0.001, 0.999))
def test_percentile_matches_sorted_oracle(seed, m, alpha):
    x = np.random.default_rng(seed).standard_normal(m)
    lo, hi = percentile_interval(x, alpha)
    assert abs(lo - sorted_interpolation(x, alpha / 2)) <= 1e-12
    assert abs(hi - sorted_interpolation(x, 1 - alpha / 2)) <= 1e-12


@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 100))
def test_percentile_sign_equivariance(seed, m):
    x = np.random.default_rng(seed).standard_normal(m)
    lo, hi = percentile_interval(x, 0.05)
    nlo, nhi = percentile_interval(-x, 0.05)
    assert nlo == -hi and nhi == -lo


def test_normal_examples():
    lo, hi = normal_interval(1.5, np.full(10, 3.0), 0.05)
    assert lo == hi == 1.5
    x = np.array([-1.0, 1.0])  # sd = sqrt(2)
    x = x / np.std(x, ddof=1)
    lo, hi = normal_interval(0.0, x, 0.05)
    assert hi == pytest.approx(1.95996, abs=1e-5)
    assert lo == pytest.approx(-1.95996, abs=1e-5)
    assert hi == pytest.approx(norm.ppf(0.975), abs=1e-14)


@given(seed=st.integers(0, 2**32 - 1), point=st.floats(-5, 5))
def test_normal_symmetric(seed, point):
    x = np.random.default_rng(seed).standard_normal(30)
    lo, hi = normal_interval(point, x, 0.1)
    assert (hi - point) == pytest.approx(point - lo, rel=1e-12, abs=1e-12)


def test_citable_contract():
    with pytest.raises(InvalidInputError):
        CiTable(np.ones((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
    t = CiTable([[-1.0, 0.2]], [[1.0, 0.9]], [[0.0, 0.5]])
    np.testing.assert_array_equal(t.contains_zero(), [[True, False]])
    assert list(t.rows("B"))[1] == ("B", 0, 1, 0.5, 0.2, 0.9)


def test_combootcca_smoke(rng):
    X, Y = correlated_data(rng, 50, 3, 3)
    res = combootcca(X, Y, n_boots=20, seed=1)
    assert res.ci_B.shape == (3, 3) and res.ci_Gamma.shape == (3, 3)
    assert np.all(res.ci_B.lower <= res.ci_B.upper)
    np.testing.assert_array_equal(res.ci_B.point, res.reference.B)
    assert res.boot_B.shape == (20, 3, 3) and res.boot_rho.shape == (20, 3)


def test_combootcca_determinism_and_workers(rng):
    X, Y = correlated_data(rng, 80, 4, 3)
    a = combootcca(X, Y, n_boots=150, seed=9)
    b = combootcca(X, Y, n_boots=150, seed=9)
    c = combootcca(X, Y, n_boots=150, seed=9, workers=3)
    for r in (b, c):
        np.testing.assert_array_equal(a.ci_B.lower, r.ci_B.lower)
        np.testing.assert_array_equal(a.ci_Gamma.upper, r.ci_Gamma.upper)
        np.testing.assert_array_equal(a.boot_B, r.boot_B)
    d = combootcca(X, Y, n_boots=150, seed=10)
    assert not np.array_equal(a.boot_B, d.boot_B)


def test_percentile_bounds_are_quantiles_of_replicates(rng):
    X, Y = correlated_data(rng, 60, 2, 2)
    res = combootcca(X, Y, n_boots=40, seed=2)
    for i in range(2):
        for k in range(2):
            col = res.boot_B[:, i, k]
            assert res.ci_B.lower[i, k] == pytest.approx(sorted_interpolation(col, 0.025), abs=1e-12)
            assert res.ci_B.upper[i, k] == pytest.approx(sorted_interpolation(col, 0.975), abs=1e-12)


def test_normal_interval_mode(rng):
    X, Y = correlated_data(rng, 60, 2, 2)
    res = combootcca(X, Y, n_boots=40, seed=2, interval="normal")
    np.testing.assert_allclose(res.ci_B.upper - res.ci_B.point, res.ci_B.point - res.ci_B.lower, atol=1e-12)


def test_alpha_nesting(rng):
    X, Y = correlated_data(rng, 60, 3, 2)
    wide = combootcca(X, Y, n_boots=100, seed=3, alpha=0.05)
    narrow = combootcca(X, Y, n_boots=100, seed=3, alpha=0.1)
    assert np.all(narrow.ci_B.lower >= wide.ci_B.lower) and np.all(narrow.ci_B.upper <= wide.ci_B.upper)
    lo, hi = wide.intervals(alpha=0.1)
    np.testing.assert_array_equal(lo.lower, narrow.ci_B.lower)


def test_identity_vs_signflip_agree_when_strong():
    rng = np.random.default_rng(5)
    z = rng.standard_normal(1000)
    X = (z + 0.3 * rng.standard_normal(1000))[:, None]
    Y = (z + 0.3 * rng.standard_normal(1000))[:, None]
    a = combootcca(X, Y, n_boots=200, seed=1, strategy="identity")
    b = combootcca(X, Y, n_boots=200, seed=1, strategy="signflip")
    assert a.reference.rho[0] > 0.9
    same = np.isclose(a.ci_B.lower, b.ci_B.lower) & np.isclose(a.ci_B.upper, b.ci_B.upper)
    assert same.mean() >= 0.9


def test_rank_deficient_resamples_are_redrawn():
    # a binary column with a single 1 is lost whenever its row is not drawn
    rng = np.random.default_rng(0)
    n = 8
    X = np.column_stack([rng.standard_normal(n), np.eye(n)[0]])
    Y = rng.standard_normal((n, 1))
    res = combootcca(X, Y, n_boots=20, seed=0, max_redraws=200)
    assert res.n_redraws > 0
    with pytest.raises(RankDeficiencyError):
        combootcca(X, Y, n_boots=20, seed=0, max_redraws=0)


def test_procrustes_note(rng):
    X, Y = correlated_data(rng, 60, 3, 2)
    res = combootcca(X, Y, n_boots=10, seed=0, strategy="procrustes")
    assert res.warnings
