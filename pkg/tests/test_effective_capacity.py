import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from twr_qos.effective_capacity import (
    QosPair,
    Weights,
    delay_violation_prob,
    effective_capacity,
    log_mean_exp_neg,
    queue_violation_prob,
    weighted_sum_objective,
)

rates = arrays(float, st.integers(1, 60), elements=st.floats(0, 20))


def test_constant_service_has_its_own_rate_as_capacity():
    assert effective_capacity(np.full(10, 2.5), 3.0) == pytest.approx(2.5)


def test_two_point_law():
    r = np.array([0.0, 2.0])
    theta = 0.7
    assert effective_capacity(r, theta) == pytest.approx(-math.log(0.5 * (1 + math.exp(-1.4))) / theta)


@given(rates)
@settings(max_examples=80, deadline=None)
def test_capacity_lies_between_min_and_mean(r):
    ec = effective_capacity(r, 1.3)
    assert r.min() - 1e-9 <= ec <= r.mean() + 1e-9


@given(rates)
@settings(max_examples=60, deadline=None)
def test_capacity_decreases_in_theta(r):
    values = [effective_capacity(r, t) for t in (0.01, 0.1, 1.0, 10.0, 100.0)]
    assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))


def test_small_theta_tends_to_the_mean(rng):
    r = rng.exponential(2.0, 1000)
    assert effective_capacity(r, 1e-8) == pytest.approx(r.mean(), rel=1e-6)


def test_large_theta_is_stable_and_tends_to_the_minimum(rng):
    r = rng.uniform(1.0, 5.0, 1000)
    ec = effective_capacity(r, 1e4)
    assert math.isfinite(ec) and ec == pytest.approx(r.min(), abs=1e-2)
    assert log_mean_exp_neg(np.array([1e5]), 1e3) == pytest.approx(-1e8)


@given(rates)
@settings(max_examples=40, deadline=None)
def test_log_mean_is_order_independent(r):
    assert log_mean_exp_neg(r, 2.0) == log_mean_exp_neg(r[::-1], 2.0)


def test_bad_arguments():
    with pytest.raises(ValueError):
        effective_capacity(np.array([]), 1.0)
    with pytest.raises(ValueError):
        effective_capacity(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        QosPair(0.0, 1.0)
    with pytest.raises(ValueError):
        Weights(0.7, 0.7)
    with pytest.raises(ValueError):
        weighted_sum_objective(np.ones(3), np.ones(4), QosPair(1, 1), Weights(0.5, 0.5))


def test_weighted_objective_and_swaps(rng):
    ra, rb = rng.exponential(1.0, 100), rng.exponential(2.0, 100)
    q, w = QosPair(0.5, 2.0), Weights(0.3, 0.7)
    val = weighted_sum_objective(ra, rb, q, w)
    assert val == pytest.approx(0.3 * effective_capacity(ra, 0.5) + 0.7 * effective_capacity(rb, 2.0))
    assert weighted_sum_objective(rb, ra, q.swapped(), w.swapped()) == pytest.approx(val)
    assert q.beta_a == pytest.approx(0.5 / math.log(2))


def test_violation_probabilities():
    assert queue_violation_prob(0.5, 4.0) == pytest.approx(math.exp(-2.0))
    assert delay_violation_prob(0.5, 2.0, 3.0) == pytest.approx(math.exp(-3.0))
