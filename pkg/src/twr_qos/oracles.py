"""Brute-force reference maximisers for the per-state problems.

Each oracle maximises the relevant per-state Lagrangian directly on a
zooming grid, without any of the stationarity algebra the allocators use.
They are slow and meant for validation on a handful of states.
"""

from __future__ import annotations

import numpy as np

from .channel_model import NetworkCsi, three_phase_region_codes
from .effective_capacity import LN2, QosPair, Weights
from .rate_regions import DecodeOrder, PowerVector
from . import three_phase as tp3
from . import two_phase as tp2

__all__ = [
    "zoom_max",
    "three_phase_oracle",
    "two_phase_source_oracle",
    "relay_oracle",
    "exact_state_oracle",
    "delay_insensitive_oracle",
]


def zoom_max(fn, hi, points: int = 201, rounds: int = 12):
    """Maximise ``fn(*coords)`` over the box ``[0, hi]`` by repeated grid zooms.

    ``hi`` is a sequence with one upper limit per coordinate; ``fn`` must
    accept broadcast arrays.  Returns ``(argmax, value)``.
    """
    hi = np.asarray(hi, dtype=float)
    lo = np.zeros_like(hi)
    top = hi.copy()
    best, best_val = lo.copy(), -np.inf
    for _ in range(rounds):
        axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.asarray(fn(*mesh))
        k = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[k] > best_val:
            best_val = float(vals[k])
            best = np.array([ax[i] for ax, i in zip(axes, k)])
        step = (hi - lo) / (points - 1)
        lo = np.clip(best - 2 * step, 0.0, top)
        hi = np.clip(best + 2 * step, 0.0, top)
    return best, best_val


def _power_cap(weights: Weights, lams, phis, share: float) -> float:
    # marginal utility of P is at most (w/phi) / (share ln2 P): the optimum lies below
    lam = min(v for v in lams if v > 0)
    return 4.0 * max(weights.a, weights.b) / (min(phis) * share * LN2 * lam)


def three_phase_oracle(csi: NetworkCsi, duals: "tp3.ThreePhaseDuals", qos: QosPair, weights: Weights):
    """Grid maximiser of the three-phase per-state Lagrangian for one state.

    Relayed directions follow the same balanced-bottleneck relay power (and,
    in R4, the same coupling of the two sources) as the allocator; the free
    source powers are searched directly.
    """
    g1, g2, g3 = float(csi.g1), float(csi.g2), float(csi.g3)
    code = int(three_phase_region_codes(csi)[0])
    cap = _power_cap(weights, (duals.lam_a, duals.lam_b), (duals.phi1, duals.phi2), 3.0)

    def lag(pa, pb, pr):
        return tp3.state_lagrangian(PowerVector(pa, pb, pr), NetworkCsi(g1, g2, g3), duals, qos, weights)

    def direct_only(which):
        if which == "a":
            (x,), _ = zoom_max(lambda p: lag(p, 0.0 * p, 0.0 * p), [cap])
        else:
            (x,), _ = zoom_max(lambda p: lag(0.0 * p, p, 0.0 * p), [cap])
        return x

    if code == 1:
        pa, pb, pr = direct_only("a"), direct_only("b"), 0.0
    elif code == 2:
        pb = direct_only("b")
        (pa,), _ = zoom_max(lambda p: lag(p, pb + 0.0 * p, tp3.relay_tie(g1, g2, g3, p)), [cap])
        pr = float(tp3.relay_tie(g1, g2, g3, np.asarray(pa)))
    elif code == 3:
        pa = direct_only("a")
        (pb,), _ = zoom_max(lambda p: lag(pa + 0.0 * p, p, tp3.relay_tie(g2, g1, g3, p)), [cap])
        pr = float(tp3.relay_tie(g2, g1, g3, np.asarray(pb)))
    else:
        tau = g1 * (g1 - g3) / (g2 * (g2 - g3))
        if tau <= 1:
            def partner(p):
                return tau * p / (1.0 + (1.0 - tau) * g3 * p)
            (pa,), _ = zoom_max(lambda p: lag(p, partner(p), tp3.relay_tie(g1, g2, g3, p)), [cap])
            pb, pr = float(partner(pa)), float(tp3.relay_tie(g1, g2, g3, np.asarray(pa)))
        else:
            def partner(p):
                return p / (tau + (tau - 1.0) * g3 * p)
            (pb,), _ = zoom_max(lambda p: lag(partner(p), p, tp3.relay_tie(g2, g1, g3, p)), [cap])
            pa, pr = float(partner(pb)), float(tp3.relay_tie(g2, g1, g3, np.asarray(pb)))
    p = PowerVector(float(pa), float(pb), float(pr))
    return p, float(lag(p.pa, p.pb, p.pr))


def two_phase_source_oracle(csi: NetworkCsi, duals: "tp2.TwoPhaseDuals", qos: QosPair, weights: Weights,
                            order: DecodeOrder = DecodeOrder.A_FIRST):
    """2-D grid maximiser over (PA, PB) of the two-phase per-state Lagrangian
    at a fixed decoding order (relay silent; its terms do not involve PA, PB)."""
    cap = _power_cap(weights, (duals.lam_a, duals.lam_b), (duals.phi1, duals.phi2), 2.0)

    def lag(pa, pb):
        return tp2.state_lagrangian(PowerVector(pa, pb, 0.0 * pa), csi, order, duals, qos, weights)

    (pa, pb), val = zoom_max(lag, [cap, cap])
    return float(pa), float(pb), val


def relay_oracle(csi: NetworkCsi, mu_a: float, mu_b: float, lam_r: float, qos: QosPair):
    """Grid maximiser over PR of the broadcast-cap terms minus the relay cost."""
    g1, g2 = float(csi.g1), float(csi.g2)
    ta, tb = qos.theta_a, qos.theta_b

    def f(pr):
        ca = np.log2(1.0 + g2 * pr) / 2.0
        cb = np.log2(1.0 + g1 * pr) / 2.0
        return mu_a * -np.expm1(-ta * ca) / ta + mu_b * -np.expm1(-tb * cb) / tb - lam_r * pr

    cap = 4.0 * max(mu_a, mu_b, 1e-300) / (2.0 * LN2 * lam_r)
    (pr,), val = zoom_max(f, [cap])
    return float(pr), val


def exact_state_oracle(csi: NetworkCsi, lam, kappa, qos: QosPair):
    """Best value of the capped two-phase per-state problem over both orders,
    searched on the (SNR_A, SNR_B) plane."""
    g1, g2 = float(csi.g1), float(csi.g2)
    ka, kb = kappa
    la, lb, lr = lam

    def util(x, k, beta):
        return k / (beta * LN2) * -np.expm1(-(beta / 2.0) * np.log1p(x))

    best = -np.inf
    cap = 4.0 * max(ka / la * g1, kb / lb * g2) / (2.0 * LN2) + 10.0
    for a_first in (True, False):
        def value(x, y):
            pa = (x * (1.0 + y) if a_first else x) / g1
            pb = (y if a_first else y * (1.0 + x)) / g2
            pr = np.maximum(x / g2, y / g1)
            return util(x, ka, qos.beta_a) + util(y, kb, qos.beta_b) - la * pa - lb * pb - lr * pr

        _, val = zoom_max(value, [cap, cap])
        best = max(best, val)
    return best


def delay_insensitive_oracle(csi: NetworkCsi, duals: "tp2.TwoPhaseDuals", weights: Weights, points: int = 61, rounds: int = 14):
    """3-D grid maximiser of the delay-insensitive two-phase per-state
    Lagrangian; the source with the larger ``w/phi' - mu`` is decoded last."""
    g1, g2 = float(csi.g1), float(csi.g2)
    xa, xb = (float(np.asarray(v).reshape(-1)[0]) for v in tp2._kappas(duals, weights))
    mu_a, mu_b = float(np.asarray(duals.mu_a).reshape(-1)[0]), float(np.asarray(duals.mu_b).reshape(-1)[0])
    a_first = xa <= xb
    d = tp2.DELTA

    def value(pa, pb, pr):
        sa, sb = g1 * pa, g2 * pb
        if a_first:
            ra, rb = np.log1p(sa / (1.0 + sb)), np.log1p(sb)
        else:
            ra, rb = np.log1p(sa), np.log1p(sb / (1.0 + sa))
        caps = mu_a * np.log1p(g2 * pr) + mu_b * np.log1p(g1 * pr)
        return (xa * ra + xb * rb + caps) / d - duals.lam_a * pa - duals.lam_b * pb - duals.lam_r * pr

    lams = [v for v in (duals.lam_a, duals.lam_b, duals.lam_r) if v > 0]
    cap = 4.0 * max(abs(xa), abs(xb), mu_a, mu_b, 1e-300) / (d * min(lams)) + 10.0
    (pa, pb, pr), val = zoom_max(value, [cap, cap, cap], points=points, rounds=rounds)
    return PowerVector(float(pa), float(pb), float(pr)), val
