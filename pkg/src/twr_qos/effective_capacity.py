"""Effective capacity and the statistical delay-QoS formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QosPair",
    "Weights",
    "RatePair",
    "effective_capacity",
    "log_mean_exp_neg",
    "weighted_sum_objective",
    "queue_violation_prob",
    "delay_violation_prob",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class QosPair:
    """QoS exponents per direction, in 1/bit."""

    theta_a: float
    theta_b: float

    def __post_init__(self) -> None:
        if not (self.theta_a > 0 and self.theta_b > 0):
            raise ValueError(f"QoS exponents must be positive, got {self.theta_a}, {self.theta_b}")

    @property
    def beta_a(self) -> float:
        return self.theta_a / LN2

    @property
    def beta_b(self) -> float:
        return self.theta_b / LN2

    def swapped(self) -> "QosPair":
        return QosPair(self.theta_b, self.theta_a)


@dataclass(frozen=True)
class Weights:
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0:
            raise ValueError(f"weights must be nonnegative, got {self.a}, {self.b}")
        if abs(self.a + self.b - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {self.a} + {self.b}")

    @classmethod
    def from_a(cls, a: float) -> "Weights":
        return cls(a, 1.0 - a)

    def swapped(self) -> "Weights":
        return Weights(self.b, self.a)


@dataclass(frozen=True)
class RatePair:
    """Bidirectional rates in bits per channel use, time fraction included."""

    ra: float | np.ndarray
    rb: float | np.ndarray


def log_mean_exp_neg(rates, theta: float) -> float:
    """ln E[exp(-theta*R)] over the samples, stable for large theta*R.

    Uses a max shift and a correctly rounded sum, so the value does not
    depend on how the samples are partitioned.
    """
    r = np.asarray(rates, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("effective capacity needs at least one rate sample")
    x = -theta * r
    m = float(x.max())
    # log1p(mean(expm1)) keeps precision when every term is close to 1.
    s = math.fsum(np.expm1(x - m)) / r.size
    return m + math.log1p(s)


def effective_capacity(rates, theta: float) -> float:
    """-(1/theta) ln E[exp(-theta*R)] for i.i.d. block-fading service."""
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    return -log_mean_exp_neg(rates, theta) / theta


def weighted_sum_objective(rates_a, rates_b, qos: QosPair, weights: Weights) -> float:
    ra = np.asarray(rates_a, dtype=float)
    rb = np.asarray(rates_b, dtype=float)
    if ra.shape != rb.shape:
        raise ValueError("rate sequences must be aligned to the same channel samples")
    return weights.a * effective_capacity(ra, qos.theta_a) + weights.b * effective_capacity(
        rb, qos.theta_b
    )


def queue_violation_prob(theta: float, q_th: float) -> float:
    return math.exp(-theta * q_th)


def delay_violation_prob(theta: float, phi_theta: float, d_th: float) -> float:
    """Delay-bound violation probability; ``phi_theta`` is the arrival
    effective bandwidth at ``theta``."""
    return math.exp(-theta * phi_theta * d_th)
