from __future__ import annotations

import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import t as student_t

from ccaboot import InvalidInputError
from ccaboot.baselines import anderson_variance, asymptotic_ci, regression_ci, split_indices
from ccaboot.core import estimate_cca

from .helpers import correlated_data

# Independent exact-rational evaluation of the displayed variance formula for
# rho = (0.9, 0.5), B row (1, 2), first column.
_R1, _R2 = Fraction(81, 100), Fraction(25, 100)
WORKED_EXAMPLE = float(
    Fraction(1, 2) * 1 + (1 - _R1) * (_R2 + _R1 - 2 * _R2 * _R1) / (_R1 - _R2) ** 2 * 4
)


def test_worked_example_frozen():
    assert WORKED_EXAMPLE == pytest.approx(2.0873724489795917, abs=1e-15)
    v = anderson_variance(np.array([[1.0, 2.0]]), np.array([0.9, 0.5]))
    assert abs(v[0, 0] - WORKED_EXAMPLE) <= 1e-12


def test_scalar_reduces_to_half_square():
    v = anderson_variance(np.array([[1.7], [-0.4]]), np.array([0.6]))
    np.testing.assert_array_equal(v[:, 0], [0.5 * 1.7**2, 0.5 * 0.4**2])


def test_gap_clamping_notes():
    notes = []
    v = anderson_variance(np.ones((2, 2)), np.array([0.5, 0.5]), notes)
    assert notes and np.all(np.isfinite(v))


@given(seed=st.integers(0, 2**32 - 1), j=st.integers(0, 2))
def test_variance_sign_invariant(seed, j):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((4, 3))
    rho = np.sort(rng.uniform(0.05, 0.95, 3))[::-1]
    D2 = D.copy()
    D2[:, j] *= -1
    np.testing.assert_array_equal(anderson_variance(D, rho), anderson_variance(D2, rho))
    assert np.all(anderson_variance(D, rho) >= 0)


def test_asymptotic_intervals(rng):
    X, Y = correlated_data(rng, 300, 3, 3)
    ci_B, ci_G, notes = asymptotic_ci(X, Y, 0.05)
    sol = estimate_cca(X, Y)
    np.testing.assert_array_equal(ci_B.point, sol.B)
    half = 1.959963984540054 * np.sqrt(anderson_variance(sol.B, sol.rho) / 300)
    np.testing.assert_allclose(ci_B.upper - ci_B.point, half, rtol=1e-12)
    assert not notes


def test_asymptotic_warns_when_p_neq_q(rng):
    X, Y = correlated_data(rng, 400, 100, 10)
    with pytest.warns(UserWarning, match="p == q"):
        ci_B, ci_G, notes = asymptotic_ci(X, Y, 0.05)
    assert ci_B.shape == (100, 10) and ci_G.shape == (10, 10)
    assert any("p == q" in n for n in notes)


def test_asymptotic_width_scales(rng):
    # well separated correlations so the plug-in variances are stable
    X = rng.standard_normal((4000, 3))
    Y = X * [2.0, 1.0, 0.4] + rng.standard_normal((4000, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        small, _, _ = asymptotic_ci(X[:1000], Y[:1000], 0.05)
        big, _, _ = asymptotic_ci(X, Y, 0.05)
    ratio = np.mean(small.upper - small.lower) / np.mean(big.upper - big.lower)
    assert abs(ratio / 2 - 1) < 0.15


def test_split_indices():
    a, b = split_indices(11, 3)
    assert len(a) == 5 and len(b) == 6
    assert sorted(np.concatenate([a, b])) == list(range(11))
    np.testing.assert_array_equal(a, split_indices(11, 3)[0])


def test_regression_scalar_closed_form(rng):
    X, Y = correlated_data(rng, 41, 1, 1)
    ci_B, ci_G = regression_ci(X, Y, 0.1, split_seed=7)
    i1, i2 = split_indices(41, 7)
    first = estimate_cca(X[i1], Y[i1])
    x = X[i2, 0] - X[i2, 0].mean()
    y = Y[i2, 0] - Y[i2, 0].mean()
    resp = y * first.Gamma[0, 0]
    n2 = len(x)
    slope = (x @ resp) / (x @ x)
    rss = np.sum((resp - slope * x) ** 2)
    se = np.sqrt(rss / (n2 - 1) / (x @ x))
    c = 1 / np.sqrt(slope**2 * (x @ x) / (n2 - 1))
    tq = student_t.ppf(0.95, n2 - 1)
    assert ci_B.point[0, 0] == pytest.approx(c * slope, rel=1e-12)
    assert ci_B.lower[0, 0] == pytest.approx(c * slope - tq * c * se, rel=1e-10)
    assert ci_B.upper[0, 0] == pytest.approx(c * slope + tq * c * se, rel=1e-10)


def test_regression_determinism_and_midpoint(rng):
    X, Y = correlated_data(rng, 200, 4, 3)
    a = regression_ci(X, Y, 0.05, split_seed=1)
    b = regression_ci(X, Y, 0.05, split_seed=1)
    np.testing.assert_array_equal(a[0].lower, b[0].lower)
    np.testing.assert_array_equal(a[1].upper, b[1].upper)
    np.testing.assert_allclose((a[0].lower + a[0].upper) / 2, a[0].point, atol=1e-12)
    assert a[0].shape == (4, 3) and a[1].shape == (3, 3)


def test_regression_rescaled_unit_variance(rng):
    X, Y = correlated_data(rng, 200, 4, 3)
    ci_B, _ = regression_ci(X, Y, 0.05, split_seed=2)
    _, i2 = split_indices(200, 2)
    S = np.cov(X[i2].T)
    np.testing.assert_allclose(np.diag(ci_B.point.T @ S @ ci_B.point), 1.0, atol=1e-10)


def test_regression_preconditions(rng):
    X, Y = correlated_data(rng, 10, 4, 3)
    with pytest.raises(InvalidInputError):
        regression_ci(X, Y)
    X, Y = correlated_data(rng, 100, 4, 3)
    with pytest.raises(InvalidInputError):
        regression_ci(X, Y[:50])
