"""Reference schemes: direct transmission, fixed powers and the static MAC order."""

from __future__ import annotations

import numpy as np

from .channel_model import NetworkCsi
from .effective_capacity import QosPair, RatePair, Weights
from .numerics import Evaluation
from .policy import PolicyEvaluation, evaluate_policy
from .rate_regions import DecodeOrder, PowerVector, capacity, three_phase_max_rates
from .three_phase import _zero_policy, initial_multipliers, run_power_dual
from .two_phase import DELTA, TwoPhaseDuals, _fixed_rates, optimize_two_phase, order_gain, weight_order

__all__ = [
    "direct_waterfill",
    "direct_transmission_policy",
    "fixed_power_policy",
    "fixed_two_phase_order",
    "weight_based_partition_policy",
]


def direct_waterfill(g3, lam, phi, omega, beta):
    """Per-state direct-link power with a 1/2 time share."""
    g3 = np.asarray(g3, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        level = (DELTA * lam * phi / omega) ** (-2.0 / (beta + 2.0))
        p = level * g3 ** (-beta / (beta + 2.0)) - 1.0 / g3
    return np.where((g3 > 0) & (p > 0), p, 0.0)


def direct_transmission_policy(samples: NetworkCsi, config, scheme: str = "direct") -> PolicyEvaluation:
    """Two-way exchange over the direct link only, half a frame per direction.

    The relay is idle, so only the source budgets are enforced.
    """
    qos, weights = config.qos, config.weights
    budgets = np.array([config.budgets[0], config.budgets[1], 0.0])
    _, _, g3 = samples.as_arrays()
    n = len(samples)
    if n == 0:
        raise ValueError("need at least one channel sample")
    if not np.any(budgets > 0):
        return _zero_policy(scheme, n, qos, weights, budgets)

    phi = np.ones(2)
    zero = np.zeros(n)
    last = {}

    def evaluate(lam):
        pa = direct_waterfill(g3, lam[0], phi[0], weights.a, qos.beta_a) if budgets[0] > 0 else zero.copy()
        pb = direct_waterfill(g3, lam[1], phi[1], weights.b, qos.beta_b) if budgets[1] > 0 else zero.copy()
        rates = RatePair(capacity(g3 * pa) / 2.0, capacity(g3 * pb) / 2.0)
        ev = evaluate_policy(scheme, PowerVector(pa, pb, zero.copy()), rates, qos, weights, budgets)
        fresh = np.array([np.mean(np.exp(-qos.theta_a * rates.ra)), np.mean(np.exp(-qos.theta_b * rates.rb))])
        last["lam"] = lam.copy()
        last["phi"] = phi.copy()
        phi[:] = np.minimum(0.5 * phi + 0.5 * fresh, 1.0)
        active = budgets > 0
        expected = np.array([pa.mean(), pb.mean(), 0.0])[active]
        dual_value = ev.objective - float(np.dot(lam[active], expected - budgets[active]))
        return Evaluation(ev, expected, dual_value)

    lam0 = initial_multipliers(budgets, weights, time_share=0.5)
    res, lam = run_power_dual(evaluate, budgets, config.subgradient, lam0, lower_fraction=(1e-9, 1e-9, 1e-9))
    ev = res.policy
    ev.converged = res.converged
    ev.iterations = res.iterations
    ev.extras.update(lam=last["lam"], phi=last["phi"], trajectory=res.trajectory, best_dual=res.best_dual)
    return ev


def fixed_two_phase_order(samples: NetworkCsi, p: PowerVector, qos: QosPair, weights: Weights,
                          tolerance: float = 1e-12, max_iterations: int = 200):
    """CSI-based decoding order at fixed powers with zero BC multipliers.

    The order weights ``w / phi'`` depend on the expectations the order
    produces, so both are iterated to a fixed point.  Returns
    ``(a_first, rates, phi)``.
    """
    a_first = np.ones(len(samples), dtype=bool)
    rates, _ = _fixed_rates(samples, p, a_first)
    phi = np.ones(2)
    for _ in range(max_iterations):
        fresh = np.array([np.mean(np.exp(-qos.theta_a * rates.ra)), np.mean(np.exp(-qos.theta_b * rates.rb))])
        fresh = np.clip(fresh, 1e-300, 1.0)
        duals = TwoPhaseDuals(0.0, 0.0, 0.0, 0.0, 0.0, *fresh)
        a_first = order_gain(samples, p, duals, qos, weights) >= 0
        rates, _ = _fixed_rates(samples, p, a_first)
        done = np.max(np.abs(fresh - phi)) < tolerance
        phi = fresh
        if done:
            break
    return a_first, rates, phi


_FIXED = {
    "three_phase": "three_phase_fixed",
    "two_phase": "two_phase_fixed",
    "two_phase_weight": "two_phase_weight_fixed",
}


def fixed_power_policy(samples: NetworkCsi, config, protocol: str) -> PolicyEvaluation:
    """Every node always transmits at its budget; only the rates adapt.

    ``protocol`` is ``"three_phase"``, ``"two_phase"`` (CSI-based order) or
    ``"two_phase_weight"`` (static order from the weights).
    """
    if protocol not in _FIXED:
        raise ValueError(f"no fixed-power variant of {protocol!r}")
    scheme = _FIXED[protocol]
    qos, weights, budgets = config.qos, config.weights, config.budgets
    n = len(samples)
    p = PowerVector(*(np.full(n, b) for b in budgets))
    if protocol == "three_phase":
        return evaluate_policy(scheme, p, three_phase_max_rates(p, samples), qos, weights, budgets)
    if protocol == "two_phase":
        a_first, rates, phi = fixed_two_phase_order(samples, p, qos, weights)
        return evaluate_policy(scheme, p, rates, qos, weights, budgets, a_first=a_first, phi=phi)
    order = weight_order(weights)
    rates, _ = _fixed_rates(samples, p, order)
    return evaluate_policy(scheme, p, rates, qos, weights, budgets, a_first=np.full(n, order is DecodeOrder.A_FIRST))


def weight_based_partition_policy(samples: NetworkCsi, config) -> PolicyEvaluation:
    """Optimal two-phase powers with the decoding order fixed by the weights."""
    return optimize_two_phase(samples, config, scheme="two_phase_weight", fixed_order=weight_order(config.weights))
