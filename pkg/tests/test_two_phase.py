import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twr_qos import oracles
from twr_qos import two_phase as tp2
from twr_qos.channel_model import NetworkCsi
from twr_qos.config import ScenarioConfig
from twr_qos.effective_capacity import QosPair, RatePair, Weights
from twr_qos.rate_regions import (
    DecodeOrder,
    PowerVector,
    bc_max_rates,
    mac_corner_rates,
    two_phase_region_contains,
)

QOS = QosPair(1.0, 0.5)
W = Weights(0.6, 0.4)


def _draw(rng):
    csi = NetworkCsi(*rng.exponential(1.0, 3))
    d = tp2.TwoPhaseDuals(*rng.uniform(0.03, 0.2, 3), *rng.uniform(0.0, 0.2, 2), *rng.uniform(0.6, 1.0, 2))
    return csi, d


@pytest.mark.parametrize("order", list(DecodeOrder))
def test_sources_match_the_grid_oracle(order):
    rng = np.random.default_rng(11)
    for _ in range(5):
        csi, d = _draw(rng)
        pa, pb = tp2.source_alloc(csi, d, QOS, W, order)
        ra, rb, ref_val = oracles.two_phase_source_oracle(csi, d, QOS, W, order)
        assert abs(pa - ra) <= 1e-3 and abs(pb - rb) <= 1e-3
        val = tp2.state_lagrangian(PowerVector(pa, pb, 0.0), csi, order, d, QOS, W)
        assert float(val) >= ref_val - 1e-6


def test_relay_matches_the_grid_oracle():
    rng = np.random.default_rng(12)
    for _ in range(10):
        csi = NetworkCsi(*rng.exponential(1.0, 3))
        mu_a, mu_b, lam_r = rng.uniform(0, 0.5), rng.uniform(0, 0.5), rng.uniform(0.02, 0.2)
        pr = tp2.relay_alloc(csi, mu_a, mu_b, lam_r, QOS)
        ref, _ = oracles.relay_oracle(csi, mu_a, mu_b, lam_r, QOS)
        assert abs(pr - ref) <= 1e-3


def test_relay_is_silent_without_cap_prices():
    assert tp2.relay_alloc(NetworkCsi(1.0, 2.0, 0.1), 0.0, 0.0, 0.1, QOS) == 0.0


def test_source_stationarity(small_samples, rng):
    n = len(small_samples)
    d = tp2.TwoPhaseDuals(0.05, 0.04, 0.03, rng.uniform(0, 0.3, n), rng.uniform(0, 0.3, n), 0.8, 0.7)
    a_first = rng.random(n) < 0.5
    pa, pb = tp2.source_alloc(small_samples, d, QOS, W, a_first)
    ra, rb = tp2.source_stationarity(small_samples, pa, pb, d, QOS, W, a_first)
    assert np.nanmax(np.abs(ra)) <= 1e-8 and np.nanmax(np.abs(rb)) <= 1e-8


def test_exact_solve_is_never_beaten_by_brute_force():
    rng = np.random.default_rng(13)
    for theta in (1e-3, 1.0, 5.0):
        q = QosPair(theta, theta)
        for _ in range(4):
            csi = NetworkCsi(*rng.exponential(1.0, 3))
            lam = tuple(rng.uniform(0.03, 0.2, 3))
            kappa = tuple(rng.uniform(0.3, 1.0, 2))
            sol = tp2.exact_state_alloc(csi, lam, kappa, q)
            assert float(sol.value[0]) >= oracles.exact_state_oracle(csi, lam, kappa, q) - 1e-9


def test_recovered_cap_prices_reproduce_the_exact_solve(small_samples):
    lam, kappa = (0.08, 0.06, 0.05), (0.7, 0.5)
    sol = tp2.exact_state_alloc(small_samples, lam, kappa, QOS)
    # kappa = w/phi' with phi' chosen so that w/phi' equals the kappa above
    d = tp2.TwoPhaseDuals(*lam, sol.mu_a, sol.mu_b, W.a / kappa[0], W.b / kappa[1])
    pa, pb = tp2.source_alloc(small_samples, d, QOS, W, sol.a_first)
    pr = tp2.relay_alloc(small_samples, sol.mu_a, sol.mu_b, lam[2], QOS)
    assert np.allclose(pa, sol.p.pa, atol=1e-6)
    assert np.allclose(pb, sol.p.pb, atol=1e-6)
    assert np.allclose(pr, sol.p.pr, atol=1e-6)


def test_exact_solve_respects_the_caps(small_samples):
    sol = tp2.exact_state_alloc(small_samples, (0.08, 0.06, 0.05), (0.7, 0.5), QOS)
    mac = mac_corner_rates(sol.p, small_samples, sol.a_first)
    assert np.all(two_phase_region_contains(mac, sol.p, small_samples, tol=1e-9))


def test_fixed_order_is_never_better_than_the_free_choice(small_samples):
    args = (small_samples, (0.08, 0.06, 0.05), (0.7, 0.5), QOS)
    free = tp2.exact_state_alloc(*args)
    for order in DecodeOrder:
        fixed = tp2.exact_state_alloc(*args, fixed_order=order)
        assert np.all(fixed.value <= free.value + 1e-15)


def test_delay_insensitive_closed_form_matches_the_oracle():
    rng = np.random.default_rng(14)
    for _ in range(5):
        csi = NetworkCsi(*rng.exponential(1.0, 3))
        d = tp2.TwoPhaseDuals(*rng.uniform(0.05, 0.2, 3), *rng.uniform(0.0, 0.3, 2))
        got = tp2.ergodic_two_phase_alloc(csi, d, W)
        ref, _ = oracles.delay_insensitive_oracle(csi, d, W)
        assert abs(got.pa - ref.pa) <= 1e-3 and abs(got.pb - ref.pb) <= 1e-3 and abs(got.pr - ref.pr) <= 1e-3


@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(0.01, 10), st.floats(0.01, 10))
@settings(max_examples=60, deadline=None)
def test_decode_order_agrees_with_the_direct_comparison(g1, g2, pa, pb):
    csi, p = NetworkCsi(g1, g2, 0.1), PowerVector(pa, pb, 1.0)
    d = tp2.TwoPhaseDuals(0.1, 0.1, 0.1, 0.05, 0.02)
    info = tp2.decode_order(csi, p, d, QOS, W, full_output=True)
    gain = float(tp2.order_gain(csi, p, d, QOS, W)[0])
    if gain > 0:
        assert info.order is DecodeOrder.A_FIRST
    elif gain < 0:
        assert info.order is DecodeOrder.B_FIRST


def test_partition_threshold_is_a_tie():
    p, q = PowerVector(2.0, 1.5, 1.0), QosPair(1.0, 1.0)
    th = tp2.partition_threshold(1.2, p, 0.8, q, "g2")
    assert th is not None
    na, nb = tp2._order_terms(1.2, th, 2.0, 1.5, q)
    assert float(na - 0.8 * nb) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        tp2.partition_threshold(1.2, p, -1.0, q)


def test_update_mu_moves_toward_the_cap():
    csi = NetworkCsi(1.0, 1.0, 0.1)
    cap = bc_max_rates(1.0, csi)
    assert tp2.update_mu(csi, cap, 1.0, QOS, (0.2, 0.3), 0.5) == pytest.approx((0.2, 0.3))
    up = tp2.update_mu(csi, RatePair(cap.ra + 0.5, cap.rb), 1.0, QOS, (0.2, 0.3), 0.5)
    assert up[0] > 0.2
    down = tp2.update_mu(csi, RatePair(0.0, 0.0), 1.0, QOS, (0.0, 0.0), 10.0)
    assert down == (0.0, 0.0)


def test_weight_order():
    assert tp2.weight_order(Weights(0.6, 0.4)) is DecodeOrder.B_FIRST
    assert tp2.weight_order(Weights(0.4, 0.6)) is DecodeOrder.A_FIRST
    assert tp2.weight_order(Weights(0.5, 0.5)) is DecodeOrder.A_FIRST


def test_optimizer_is_feasible(small_samples, small_config):
    ev = tp2.optimize_two_phase(small_samples, small_config)
    assert ev.converged
    assert np.max(np.abs(ev.residuals)) <= small_config.tolerance_power
    assert np.all(two_phase_region_contains(ev.rates, ev.powers, small_samples, tol=1e-6))


def test_swapping_the_users_mirrors_the_policy(small_samples, small_config):
    cfg = small_config.replace(theta_a=2.0, theta_b=0.5, weight_a=0.3)
    mirror = cfg.replace(theta_a=0.5, theta_b=2.0, weight_a=0.7)
    a = tp2.optimize_two_phase(small_samples, cfg)
    b = tp2.optimize_two_phase(small_samples.swapped(), mirror)
    assert a.objective == pytest.approx(b.objective, rel=1e-3)
    assert a.ec_a == pytest.approx(b.ec_b, rel=1e-2)


def test_zero_budgets(small_samples):
    cfg = ScenarioConfig(power_a_db=float("-inf"), power_b_db=float("-inf"), power_r_db=float("-inf"))
    assert tp2.optimize_two_phase(small_samples, cfg).objective == 0.0
