import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twr_qos.numerics import (
    BracketError,
    Evaluation,
    RootSearchConfig,
    SubgradientConfig,
    bisect_root,
    dual_ascent,
    maximize_from_derivative,
    solve_decreasing,
    stationary_then_bisect,
)


@given(st.floats(0.01, 1e4))
@settings(max_examples=60, deadline=None)
def test_bisect_root_grows_its_bracket(c):
    root = bisect_root(lambda x: c - x, 0.0, 1e-3, RootSearchConfig(tolerance=1e-12))
    assert root == pytest.approx(c, rel=1e-9)


def test_bisect_root_clamps_at_the_lower_end():
    assert bisect_root(lambda x: -1.0 - x, 0.0, 1.0) == 0.0


def test_bisect_root_reports_a_missing_sign_change():
    with pytest.raises(BracketError):
        bisect_root(lambda x: 1.0, 0.0, 1.0, RootSearchConfig(max_iterations=10))


def test_stationary_then_bisect_returns_the_smallest_root():
    # hump with roots at 1 and 3, stationary point at 2
    f = lambda x: -(x - 1.0) * (x - 3.0)
    info = stationary_then_bisect(f, 0.0, 5.0, full_output=True, df=lambda x: -2 * x + 4)
    assert info.root == pytest.approx(1.0, abs=1e-9)
    assert info.stationary_point == pytest.approx(2.0)
    assert info.multiple_roots and info.bracketed


def test_stationary_then_bisect_without_sign_change_returns_a_boundary():
    info = stationary_then_bisect(lambda x: 1.0 + x * x, 0.0, 2.0, full_output=True)
    assert not info.bracketed and info.root == 2.0
    info = stationary_then_bisect(lambda x: -1.0 - x * x, 0.0, 2.0, full_output=True)
    assert info.root == 0.0


def test_stationary_then_bisect_rejects_a_broken_derivative():
    with pytest.raises(ArithmeticError):
        stationary_then_bisect(lambda x: x, 0.0, 1.0, df=lambda x: math.nan)


def test_solve_decreasing_vectorised(rng):
    c = rng.uniform(0.0, 50.0, 500)
    c[:10] = -1.0
    x = solve_decreasing(lambda x, c: c - x, (c,), 1.0)
    want = np.where(c > 0, c, 0.0)
    assert np.allclose(x, want, rtol=1e-10, atol=1e-12)


def test_solve_decreasing_survives_the_iteration_cap(rng):
    c = rng.uniform(1.0, 5.0, 50)
    x = solve_decreasing(lambda x, c: c - x ** 3, (c,), 1.0, max_iterations=2)
    assert x.shape == (50,) and np.all(np.isfinite(x))


def test_maximize_from_derivative_prefers_the_better_crossing():
    # objective with a local max near 1 and a higher one near 10
    def obj(x, s):
        return -((x - 1.0) ** 2) * ((x - 10.0) ** 2) / 100.0 + s * x

    def der(x, s):
        return -(2 * (x - 1) * (x - 10) ** 2 + 2 * (x - 1) ** 2 * (x - 10)) / 100.0 + s

    s = np.array([0.05, -0.05])
    x = maximize_from_derivative(der, obj, (s,), 20.0)
    assert x[0] == pytest.approx(10.0, abs=0.2)
    assert x[1] == pytest.approx(1.0, abs=0.2)


def test_maximize_from_derivative_keeps_zero_when_it_wins():
    x = maximize_from_derivative(lambda x: -1.0 - x, lambda x: -x - x * x / 2, (), 1.0)
    assert x[0] == 0.0


def _quadratic_evaluator(weights):
    # maximise sum_j w_j log(1 + p_j) - lam_j p_j: p_j = w_j / lam_j - 1
    def evaluate(lam):
        p = np.maximum(weights / lam - 1.0, 0.0)
        value = float(np.sum(weights * np.log1p(p) - lam * p))
        return Evaluation(p, p, value)

    return evaluate


@pytest.mark.parametrize("schedule", ["adaptive", "constant", "diminishing"])
def test_dual_ascent_meets_the_budgets(schedule):
    weights, budgets = np.array([2.0, 5.0]), np.array([1.0, 3.0])
    cfg = SubgradientConfig(schedule=schedule, step=0.5, max_iterations=5000)
    res = dual_ascent(lambda lam: _shift(_quadratic_evaluator(weights)(lam), lam, budgets), weights / 2, budgets, cfg)
    assert res.converged
    assert np.allclose(res.policy, budgets, rtol=1e-3)
    assert np.allclose(res.lam, weights / (budgets + 1.0), rtol=1e-2)
    assert all(b <= a for a, b in zip(res.best_dual, res.best_dual[1:]))


def _shift(ev, lam, budgets):
    return Evaluation(ev.policy, ev.expected, ev.dual_value + float(np.dot(lam, budgets)))


def test_dual_ascent_needs_positive_budgets():
    with pytest.raises(ValueError):
        dual_ascent(_quadratic_evaluator(np.ones(1)), [1.0], [0.0])


def test_config_validation():
    with pytest.raises(ValueError):
        SubgradientConfig(schedule="random")
    with pytest.raises(ValueError):
        RootSearchConfig(tolerance=0.0)
