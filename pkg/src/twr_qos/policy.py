"""Common result record for every transmission scheme."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .effective_capacity import QosPair, RatePair, Weights, effective_capacity
from .rate_regions import PowerVector

__all__ = ["PolicyEvaluation", "evaluate_policy", "relative_residuals"]


def relative_residuals(expected, budgets) -> np.ndarray:
    """(E[P] - budget) / budget, or 0 for a zero budget met exactly."""
    expected = np.asarray(expected, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = (expected - budgets) / budgets
    return np.where(budgets > 0, rel, np.where(expected > 0, np.inf, 0.0))


@dataclass
class PolicyEvaluation:
    """Per-sample powers and rates of a scheme with its summary statistics."""

    scheme: str
    powers: PowerVector
    rates: RatePair
    objective: float
    ec_a: float
    ec_b: float
    residuals: np.ndarray
    converged: bool
    iterations: int
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def expected_powers(self) -> np.ndarray:
        return np.array([np.mean(self.powers.pa), np.mean(self.powers.pb), np.mean(self.powers.pr)])


def evaluate_policy(
    scheme: str,
    powers: PowerVector,
    rates: RatePair,
    qos: QosPair,
    weights: Weights,
    budgets,
    converged: bool = True,
    iterations: int = 0,
    **extras,
) -> PolicyEvaluation:
    ec_a = effective_capacity(rates.ra, qos.theta_a)
    ec_b = effective_capacity(rates.rb, qos.theta_b)
    expected = [np.mean(powers.pa), np.mean(powers.pb), np.mean(powers.pr)]
    return PolicyEvaluation(
        scheme=scheme,
        powers=powers,
        rates=rates,
        objective=weights.a * ec_a + weights.b * ec_b,
        ec_a=ec_a,
        ec_b=ec_b,
        residuals=relative_residuals(expected, budgets),
        converged=converged,
        iterations=iterations,
        extras=dict(extras),
    )
