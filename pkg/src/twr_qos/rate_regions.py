"""Instantaneous achievable-rate regions of three- and two-phase DF relaying.

Every function broadcasts over array-valued powers and channel states.  Rates
are in bits per channel use with the slot fraction (1/3 or 1/2) applied.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel_model import NetworkCsi
from .effective_capacity import LN2, RatePair

__all__ = [
    "PowerVector",
    "DecodeOrder",
    "capacity",
    "three_phase_max_rates",
    "mac_corner_rates",
    "bc_max_rates",
    "two_phase_region_contains",
]


def capacity(x):
    """C(x) = log2(1 + x)."""
    return np.log1p(x) / LN2


@dataclass(frozen=True)
class PowerVector:
    pa: float | np.ndarray
    pb: float | np.ndarray
    pr: float | np.ndarray

    def __post_init__(self) -> None:
        for name in ("pa", "pb", "pr"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ValueError(f"{name} must be finite and nonnegative")

    def take(self, idx) -> "PowerVector":
        return PowerVector(np.asarray(self.pa)[idx], np.asarray(self.pb)[idx], np.asarray(self.pr)[idx])


class DecodeOrder(enum.Enum):
    """Successive-decoding order at the relay in the MAC phase."""

    A_FIRST = "R1'"
    B_FIRST = "R2'"


def _a_first(order) -> np.ndarray | bool:
    if isinstance(order, DecodeOrder):
        return order is DecodeOrder.A_FIRST
    return np.asarray(order, dtype=bool)


def three_phase_max_rates(p: PowerVector, csi: NetworkCsi) -> RatePair:
    g1, g2, g3 = csi.g1, csi.g2, csi.g3
    relayed_a = np.minimum(capacity(g1 * p.pa), capacity(g3 * p.pa) + capacity(g2 * p.pr))
    relayed_b = np.minimum(capacity(g2 * p.pb), capacity(g3 * p.pb) + capacity(g1 * p.pr))
    ra = np.where(np.greater(g1, g3), relayed_a, capacity(g3 * p.pa)) / 3.0
    rb = np.where(np.greater(g2, g3), relayed_b, capacity(g3 * p.pb)) / 3.0
    if np.ndim(ra) == 0:
        return RatePair(float(ra), float(rb))
    return RatePair(ra, rb)


def mac_corner_rates(p: PowerVector, csi: NetworkCsi, order) -> RatePair:
    """Corner of the MAC pentagon reached by successive decoding.

    With ``A_FIRST`` the relay decodes A while treating B as noise, then
    decodes B interference-free.
    """
    sa = csi.g1 * p.pa
    sb = csi.g2 * p.pb
    a_first = _a_first(order)
    ra = np.where(a_first, capacity(sa / (1.0 + sb)), capacity(sa)) / 2.0
    rb = np.where(a_first, capacity(sb), capacity(sb / (1.0 + sa))) / 2.0
    if np.ndim(ra) == 0:
        return RatePair(float(ra), float(rb))
    return RatePair(ra, rb)


def bc_max_rates(pr, csi: NetworkCsi) -> RatePair:
    """BC-phase caps: A's message reaches B over g2, B's reaches A over g1."""
    ra = capacity(csi.g2 * pr) / 2.0
    rb = capacity(csi.g1 * pr) / 2.0
    if np.ndim(ra) == 0:
        return RatePair(float(ra), float(rb))
    return RatePair(ra, rb)


def two_phase_region_contains(r: RatePair, p: PowerVector, csi: NetworkCsi, tol: float = 1e-9):
    """Membership in MAC(PA, PB) intersected with BC(PR), additive tolerance."""
    sa = csi.g1 * p.pa
    sb = csi.g2 * p.pb
    bc = bc_max_rates(p.pr, csi)
    ok = (
        (np.less_equal(r.ra, capacity(sa) / 2.0 + tol))
        & (np.less_equal(r.rb, capacity(sb) / 2.0 + tol))
        & (np.less_equal(np.add(r.ra, r.rb), capacity(sa + sb) / 2.0 + tol))
        & (np.less_equal(r.ra, np.add(bc.ra, tol)))
        & (np.less_equal(r.rb, np.add(bc.rb, tol)))
    )
    if np.ndim(ok) == 0:
        return bool(ok)
    return ok
