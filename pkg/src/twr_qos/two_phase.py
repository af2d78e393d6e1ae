"""Optimal power and rate adaptation for two-phase DF two-way relaying.

Phase 1 is a MAC to the relay with successive decoding; phase 2 is a relay
broadcast.  Per channel state the allocation maximises

    kA (1 - e^{-thA RA}) / thA + kB (1 - e^{-thB RB}) / thB
        + muA (1 - e^{-thA CA}) / thA + muB (1 - e^{-thB CB}) / thB
        - lamA PA - lamB PB - lamR PR,

with ``k_i = w_i / phi_i' - mu_i``, RA, RB the MAC corner rates and
CA = C(g2 PR)/2, CB = C(g1 PR)/2 the broadcast caps.  The per-state
multipliers ``mu`` enforce RA <= CA and RB <= CB.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel_model import NetworkCsi
from .effective_capacity import LN2, QosPair, RatePair, Weights
from .numerics import (
    Evaluation,
    RootSearchConfig,
    maximize_from_derivative,
    solve_decreasing,
    stationary_then_bisect,
)
from .policy import PolicyEvaluation, evaluate_policy
from .rate_regions import DecodeOrder, PowerVector, bc_max_rates, capacity, mac_corner_rates
from .three_phase import initial_multipliers, run_power_dual

__all__ = [
    "DELTA",
    "TwoPhaseDuals",
    "OrderInfo",
    "partition_threshold",
    "decode_order",
    "order_gain",
    "source_alloc",
    "relay_alloc",
    "relay_stationarity",
    "source_stationarity",
    "update_mu",
    "state_lagrangian",
    "ergodic_two_phase_alloc",
    "StateSolution",
    "exact_state_alloc",
    "weight_order",
    "optimize_two_phase",
]

DELTA = 2.0 * LN2


@dataclass(frozen=True)
class TwoPhaseDuals:
    """Global power multipliers plus per-state BC multipliers ``mu``.

    ``mu_a`` and ``mu_b`` may be scalars or arrays aligned with the samples.
    """

    lam_a: float
    lam_b: float
    lam_r: float
    mu_a: float | np.ndarray = 0.0
    mu_b: float | np.ndarray = 0.0
    phi1: float = 1.0
    phi2: float = 1.0

    def __post_init__(self) -> None:
        if min(self.lam_a, self.lam_b, self.lam_r) < 0:
            raise ValueError("power multipliers must be nonnegative")
        if np.any(np.asarray(self.mu_a) < 0) or np.any(np.asarray(self.mu_b) < 0):
            raise ValueError("BC multipliers must be nonnegative")
        if not (0 < self.phi1 <= 1 and 0 < self.phi2 <= 1):
            raise ValueError("phi' must lie in (0, 1]")

    def swapped(self) -> "TwoPhaseDuals":
        return TwoPhaseDuals(self.lam_b, self.lam_a, self.lam_r, self.mu_b, self.mu_a, self.phi2, self.phi1)


def _kappas(duals: TwoPhaseDuals, weights: Weights):
    ka = weights.a / duals.phi1 - np.asarray(duals.mu_a, dtype=float)
    kb = weights.b / duals.phi2 - np.asarray(duals.mu_b, dtype=float)
    return ka, kb


def alphas(duals: TwoPhaseDuals, weights: Weights):
    """(alpha1, alpha2) = delta lam / kappa; infinite where kappa <= 0."""
    ka, kb = _kappas(duals, weights)
    with np.errstate(divide="ignore"):
        a1 = np.where(ka > 0, DELTA * duals.lam_a / np.where(ka > 0, ka, 1.0), np.inf)
        a2 = np.where(kb > 0, DELTA * duals.lam_b / np.where(kb > 0, kb, 1.0), np.inf)
    return a1, a2


def _util(snr, kappa, beta):
    # kappa (1 - e^{-theta R}) / theta with R = C(snr)/2
    return kappa / (beta * LN2) * -np.expm1(-(beta / 2.0) * np.log1p(snr))


# ---------------------------------------------------------------- sources


def _pa_star(t, g1, ka, ba, la):
    """A's best power when it is decoded first under interference ``t``."""
    pos = ka > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = DELTA * la * t / (np.where(pos, ka, 1.0) * g1)
        pa = t / g1 * (x ** (-2.0 / (ba + 2.0)) - 1.0)
    return np.where(pos & (pa > 0), pa, 0.0)


def _src_h(pb, g1, g2, ka, ba, la, kb, bb, lb):
    # d/dPB of the objective at A's best response (envelope theorem)
    t = 1.0 + g2 * pb
    pa = _pa_star(t, g1, ka, ba, la)
    return kb * g2 / DELTA * np.exp(-(bb + 2.0) / 2.0 * np.log1p(g2 * pb)) - lb - la * g2 * pa / t


def _src_obj(pb, g1, g2, ka, ba, la, kb, bb, lb):
    t = 1.0 + g2 * pb
    pa = _pa_star(t, g1, ka, ba, la)
    return _util(g1 * pa / t, ka, ba) + _util(g2 * pb, kb, bb) - la * pa - lb * pb


def _solve_first(g1, g2, ka, ba, la, kb, bb, lb):
    """(PA, PB) with A decoded first (A sees B as noise)."""
    kb_pos = np.where(kb > 0, kb, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        upper = ((kb_pos * g2 / (DELTA * lb)) ** (2.0 / (bb + 2.0)) - 1.0) / g2
    upper = np.where(np.isfinite(upper) & (upper > 0), upper, 1.0 / g2)
    params = (g1, g2, ka, ba, la, kb, bb, lb)
    pb = maximize_from_derivative(_src_h, _src_obj, params, upper)
    pa = _pa_star(1.0 + g2 * pb, g1, ka, ba, la)
    return pa, pb


def _sources(g1, g2, ka, kb, qos: QosPair, lam, a_first):
    """Batched source powers for a boolean decode-order mask."""
    ba, bb = qos.beta_a, qos.beta_b
    la, lb = lam[0], lam[1]
    n = g1.size
    pa, pb = np.zeros(n), np.zeros(n)
    ka = np.broadcast_to(ka, (n,))
    kb = np.broadcast_to(kb, (n,))
    m = np.asarray(a_first, dtype=bool)
    if m.any():
        pa[m], pb[m] = _solve_first(g1[m], g2[m], ka[m], ba, la, kb[m], bb, lb)
    m = ~m
    if m.any():
        pb[m], pa[m] = _solve_first(g2[m], g1[m], kb[m], bb, lb, ka[m], ba, la)
    return pa, pb


def source_alloc(csi: NetworkCsi, duals: TwoPhaseDuals, qos: QosPair, weights: Weights, order):
    """Optimal (PA, PB) for a given decoding order.

    Directions whose ``kappa = w/phi' - mu`` is nonpositive get zero power.
    """
    g1, g2, _ = csi.as_arrays()
    ka, kb = _kappas(duals, weights)
    a_first = order is DecodeOrder.A_FIRST if isinstance(order, DecodeOrder) else np.asarray(order, dtype=bool)
    pa, pb = _sources(g1, g2, ka, kb, qos, (duals.lam_a, duals.lam_b), np.broadcast_to(a_first, g1.shape))
    if np.ndim(csi.g1) == 0:
        return float(pa[0]), float(pb[0])
    return pa, pb


def source_stationarity(csi: NetworkCsi, pa, pb, duals: TwoPhaseDuals, qos: QosPair, weights: Weights, order):
    """Residuals (rA, rB) of the source stationarity conditions.

    ``rA`` is the A condition (NaN where PA = 0); ``rB`` the B condition at
    A's best response (NaN where PB = 0).  Orders are mirrored as needed.
    """
    g1, g2, _ = csi.as_arrays()
    pa, pb = np.atleast_1d(pa).astype(float), np.atleast_1d(pb).astype(float)
    ka, kb = _kappas(duals, weights)
    ka = np.broadcast_to(ka, g1.shape)
    kb = np.broadcast_to(kb, g1.shape)
    a_first = order is DecodeOrder.A_FIRST if isinstance(order, DecodeOrder) else np.asarray(order, dtype=bool)
    a_first = np.broadcast_to(a_first, g1.shape)
    ba, bb, la, lb = qos.beta_a, qos.beta_b, duals.lam_a, duals.lam_b

    def first(g1, g2, ka, ba, la, kb, bb, lb, pa, pb):
        t = 1.0 + g2 * pb
        ra = ka * g1 / (DELTA * t) * np.exp(-(ba + 2.0) / 2.0 * np.log1p(g1 * pa / t)) - la
        rb = _src_h(pb, g1, g2, ka, ba, la, kb, bb, lb)
        return ra, rb

    ra1, rb1 = first(g1, g2, ka, ba, la, kb, bb, lb, pa, pb)
    rb2, ra2 = first(g2, g1, kb, bb, lb, ka, ba, la, pb, pa)
    ra = np.where(a_first, ra1, ra2)
    rb = np.where(a_first, rb1, rb2)
    return np.where(pa > 0, ra, np.nan), np.where(pb > 0, rb, np.nan)


# ---------------------------------------------------------------- relay


def relay_stationarity(pr, g1, g2, mu_a, mu_b, qos: QosPair, lam_r):
    """Left side of the relay condition; decreasing in ``pr``."""
    ba, bb = qos.beta_a, qos.beta_b
    return (
        mu_a * g2 * np.exp(-(ba + 2.0) / 2.0 * np.log1p(g2 * pr))
        + mu_b * g1 * np.exp(-(bb + 2.0) / 2.0 * np.log1p(g1 * pr))
        - DELTA * lam_r
    )


def _relay_f(pr, g1, g2, mu_a, mu_b, ba, bb, lr):
    return (
        mu_a * g2 * np.exp(-(ba + 2.0) / 2.0 * np.log1p(g2 * pr))
        + mu_b * g1 * np.exp(-(bb + 2.0) / 2.0 * np.log1p(g1 * pr))
        - DELTA * lr
    )


def _relay(g1, g2, mu_a, mu_b, qos: QosPair, lam_r):
    n = g1.size
    mu_a = np.broadcast_to(np.asarray(mu_a, dtype=float), (n,))
    mu_b = np.broadcast_to(np.asarray(mu_b, dtype=float), (n,))
    ba, bb = qos.beta_a, qos.beta_b
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ua = ((2.0 * mu_a * g2 / (DELTA * lam_r)) ** (2.0 / (ba + 2.0)) - 1.0) / g2
        ub = ((2.0 * mu_b * g1 / (DELTA * lam_r)) ** (2.0 / (bb + 2.0)) - 1.0) / g1
    upper = np.fmax(ua, ub)
    upper = np.where(np.isfinite(upper) & (upper > 0), upper, 1.0)
    return solve_decreasing(_relay_f, (g1, g2, mu_a, mu_b, ba, bb, lam_r), upper, 0.0)


def relay_alloc(csi: NetworkCsi, mu_a, mu_b, lam_r: float, qos: QosPair):
    """Relay power balancing the BC multipliers against ``lam_r``; zero when
    ``mu_a g2 + mu_b g1 <= delta lam_r``."""
    g1, g2, _ = csi.as_arrays()
    pr = _relay(g1, g2, mu_a, mu_b, qos, lam_r)
    if np.ndim(csi.g1) == 0:
        return float(pr[0])
    return pr


# ---------------------------------------------------------------- partition


@dataclass
class OrderInfo:
    order: DecodeOrder
    k: float | None
    threshold_g2: float | None
    threshold_g1: float | None
    rule: str
    diagnostics: list = field(default_factory=list)


def _order_terms(g1, g2, pa, pb, qos: QosPair):
    """(a1 - a2, b2 - b1): exponential-rate penalties of decoding first."""
    ha, hb = qos.beta_a / 2.0, qos.beta_b / 2.0
    a1 = np.exp(-ha * np.log1p(g1 * pa / (1.0 + g2 * pb)))
    a2 = np.exp(-ha * np.log1p(g1 * pa))
    b2 = np.exp(-hb * np.log1p(g2 * pb / (1.0 + g1 * pa)))
    b1 = np.exp(-hb * np.log1p(g2 * pb))
    return a1 - a2, b2 - b1


def partition_threshold(fixed_gain: float, p: PowerVector, k: float, qos: QosPair, solve_for: str = "g2",
                        cfg: RootSearchConfig = RootSearchConfig()):
    """Gain at which both decoding orders tie, or None.

    With ``solve_for="g2"`` the A-R gain is ``fixed_gain`` and the B-R gain
    solving ``(a1 - a2) = K (b2 - b1)`` is returned; ``"g1"`` swaps roles.
    The smallest positive root wins when several exist.
    """
    if k < 0:
        raise ValueError("K must be nonnegative")
    pa, pb = float(p.pa), float(p.pb)
    if pa <= 0 or pb <= 0 or fixed_gain <= 0:
        return None
    if solve_for == "g2":
        def fn(x):
            na, nb = _order_terms(fixed_gain, x, pa, pb, qos)
            return float(na - k * nb)
        scale = fixed_gain * pa / pb
    elif solve_for == "g1":
        def fn(x):
            na, nb = _order_terms(x, fixed_gain, pa, pb, qos)
            return float(na - k * nb)
        scale = fixed_gain * pb / pa
    else:
        raise ValueError("solve_for must be 'g1' or 'g2'")
    lo, hi = scale * 1e-8, scale * 1e8

    # Each term vanishes at zero gain; compare them relative to the gain.
    def g(x):
        return fn(x) / x

    info = stationary_then_bisect(g, lo, hi, cfg, full_output=True)
    if not info.bracketed or info.root <= 0:
        return None
    return info.root


def order_gain(csi: NetworkCsi, p: PowerVector, duals: TwoPhaseDuals, qos: QosPair, weights: Weights):
    """Lagrangian(A first) - Lagrangian(B first) at fixed powers."""
    g1, g2, _ = csi.as_arrays()
    ka, kb = _kappas(duals, weights)
    na, nb = _order_terms(g1, g2, np.atleast_1d(p.pa), np.atleast_1d(p.pb), qos)
    return -ka * na / qos.theta_a + kb * nb / qos.theta_b


def decode_order(csi: NetworkCsi, p: PowerVector, duals: TwoPhaseDuals, qos: QosPair, weights: Weights,
                 full_output: bool = False):
    """Successive-decoding order for one channel state at powers ``p``.

    With K = thA kB / (thB kA), A is decoded first when g2 lies below the
    B-R threshold (or g1 above the A-R threshold).  Without a threshold, or
    when kA <= 0, the two Lagrangian contributions are compared directly;
    the direct comparison also overrides a threshold verdict it contradicts
    (recorded in the diagnostics).  Exact ties decode A first.
    """
    g1, g2 = float(csi.g1), float(csi.g2)
    ka, kb = (float(np.asarray(v).reshape(-1)[0]) for v in _kappas(duals, weights))
    gain = float(order_gain(csi, p, duals, qos, weights)[0])
    direct = DecodeOrder.A_FIRST if gain >= 0 else DecodeOrder.B_FIRST
    diagnostics = []
    k = th2 = th1 = None
    if ka <= 0:
        diagnostics.append("K undefined (kappa_A <= 0); direct comparison")
        rule, order = "direct", direct
    else:
        k = qos.theta_a * max(kb, 0.0) / (qos.theta_b * ka)
        th2 = partition_threshold(g1, p, k, qos, "g2")
        if th2 is not None:
            rule, order = "threshold_g2", (DecodeOrder.A_FIRST if g2 < th2 else DecodeOrder.B_FIRST)
        else:
            th1 = partition_threshold(g2, p, k, qos, "g1")
            if th1 is not None:
                rule, order = "threshold_g1", (DecodeOrder.A_FIRST if g1 > th1 else DecodeOrder.B_FIRST)
            else:
                rule, order = "direct", direct
        if order is not direct and gain != 0:
            diagnostics.append(f"{rule} verdict overridden by direct comparison")
            rule, order = "direct", direct
    info = OrderInfo(order, k, th2, th1, rule, diagnostics)
    return info if full_output else order


# ---------------------------------------------------------------- per-state pieces


def update_mu(csi: NetworkCsi, rates: RatePair, pr, qos: QosPair, mu, step):
    """One projected subgradient step on the BC multipliers.

    ``rates`` are the MAC rates; the step moves ``mu`` up when a rate
    exceeds its broadcast cap.
    """
    cap = bc_max_rates(pr, csi)
    mu_a, mu_b = mu
    za, zb = (step, step) if np.ndim(step) == 0 and not isinstance(step, tuple) else step
    ga = np.exp(-qos.theta_a * np.asarray(rates.ra)) - np.exp(-qos.theta_a * np.asarray(cap.ra))
    gb = np.exp(-qos.theta_b * np.asarray(rates.rb)) - np.exp(-qos.theta_b * np.asarray(cap.rb))
    new_a = np.maximum(0.0, mu_a - za * ga)
    new_b = np.maximum(0.0, mu_b - zb * gb)
    if np.ndim(new_a) == 0:
        return float(new_a), float(new_b)
    return new_a, new_b


def state_lagrangian(p: PowerVector, csi: NetworkCsi, order, duals: TwoPhaseDuals, qos: QosPair, weights: Weights):
    """Per-state integrand with MAC corner rates and BC multiplier terms."""
    ka, kb = _kappas(duals, weights)
    r = mac_corner_rates(p, csi, order)
    cap = bc_max_rates(p.pr, csi)
    ta, tb = qos.theta_a, qos.theta_b
    return (
        ka * -np.expm1(-ta * np.asarray(r.ra)) / ta
        + kb * -np.expm1(-tb * np.asarray(r.rb)) / tb
        + np.asarray(duals.mu_a) * -np.expm1(-ta * np.asarray(cap.ra)) / ta
        + np.asarray(duals.mu_b) * -np.expm1(-tb * np.asarray(cap.rb)) / tb
        - duals.lam_a * p.pa
        - duals.lam_b * p.pb
        - duals.lam_r * p.pr
    )


def _delay_insensitive_sources(g1, g2, xa, xb, la, lb):
    """theta -> 0 source powers with A decoded first (requires xa <= xb)."""
    n = g1.size
    pa, pb = np.zeros(n), np.zeros(n)
    done = np.zeros(n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        den = lb * g1 - la * g2
        pb_i = g1 * (xb - xa) / (DELTA * den) - 1.0 / g2
        pa_i = xa / (DELTA * la) - (1.0 + g2 * pb_i) / g1
        ok = (xa > 0) & (den > 0) & (pb_i > 0) & (pa_i > 0)
        pa[ok], pb[ok] = pa_i[ok], pb_i[ok]
        done |= ok
        # A silent: B water-fills alone; valid if A's marginal at zero is small
        pb0 = np.maximum(xb / (DELTA * lb) - 1.0 / g2, 0.0)
        ok = ~done & (np.maximum(xa, 0.0) * g1 / (DELTA * (1.0 + g2 * pb0)) <= la)
        pb[ok] = np.where(xb > 0, pb0, 0.0)[ok]
        done |= ok
        # B silent: A water-fills alone
        pa0 = np.maximum(xa / (DELTA * la) - 1.0 / g1, 0.0)
        pa[~done] = pa0[~done]
    return pa, pb


def ergodic_two_phase_alloc(csi: NetworkCsi, duals: TwoPhaseDuals, weights: Weights) -> PowerVector:
    """Closed-form allocation for delay-insensitive traffic.

    The source with the larger ``xi = w/phi' - mu`` is decoded last; the relay
    power is the positive root of a quadratic (zero when
    ``mu_a g2 + mu_b g1 <= delta lam_r``).
    """
    g1, g2, _ = csi.as_arrays()
    xa, xb = (np.broadcast_to(v, g1.shape).astype(float) for v in _kappas(duals, weights))
    mu_a = np.broadcast_to(np.asarray(duals.mu_a, dtype=float), g1.shape)
    mu_b = np.broadcast_to(np.asarray(duals.mu_b, dtype=float), g1.shape)
    la, lb, lr = duals.lam_a, duals.lam_b, duals.lam_r

    a_first = xa <= xb
    pa, pb = np.zeros(g1.size), np.zeros(g1.size)
    m = a_first
    pa[m], pb[m] = _delay_insensitive_sources(g1[m], g2[m], xa[m], xb[m], la, lb)
    m = ~a_first
    pb[m], pa[m] = _delay_insensitive_sources(g2[m], g1[m], xb[m], xa[m], lb, la)

    c1 = lr * g1 * g2
    c2 = lr * (g1 + g2) - g1 * g2 * (mu_a + mu_b) / DELTA
    c3 = lr - (mu_a * g2 + mu_b * g1) / DELTA
    with np.errstate(divide="ignore", invalid="ignore"):
        root = (-c2 + np.sqrt(np.maximum(c2 * c2 - 4.0 * c1 * c3, 0.0))) / (2.0 * c1)
    pr = np.where(c3 < 0, np.maximum(root, 0.0), 0.0)
    if np.ndim(csi.g1) == 0:
        return PowerVector(float(pa[0]), float(pb[0]), float(pr[0]))
    return PowerVector(pa, pb, pr)


# ---------------------------------------------------------------- exact per-state solve
#
# With the caps folded in, a state's problem lives in the SNR domain: x, y
# are the SNRs behind A's and B's rates, the relay spends
# max(x / g2, y / g1) and, with the first-decoded source written first,
# the MAC spends x (1 + y) / g_first on it and y / g_second on the other.
# For fixed y the objective is concave in x, so x has a closed form and only
# a scalar search over y remains.


def _snr_at_slope(kappa, slope, beta):
    # SNR where the marginal utility kappa/delta (1+x)^{-(beta+2)/2} meets slope
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return (np.maximum(kappa, 0.0) / (DELTA * slope)) ** (2.0 / (beta + 2.0)) - 1.0


def _inner_x(y, g1, g2, kf, bf, lf, lr):
    """First source's SNR given the second's; case 0: relay sized for the
    first, 1: sized for the second, 2: both caps tight."""
    s = lf * (1.0 + y) / g1
    knee = g2 * y / g1
    x_hi = _snr_at_slope(kf, s + lr / g2, bf)
    x_lo = _snr_at_slope(kf, s, bf)
    case = np.where(x_hi >= knee, 0, np.where(x_lo <= knee, 1, 2))
    x = np.where(case == 0, x_hi, np.where(case == 1, np.maximum(x_lo, 0.0), knee))
    return x, case


def _profile_h(y, g1, g2, kf, bf, lf, ks, bs, ls, lr):
    x, case = _inner_x(y, g1, g2, kf, bf, lf, lr)
    base = ks / DELTA * np.exp(-(bs + 2.0) / 2.0 * np.log1p(y)) - lf * x / g1 - ls / g2
    knee = kf / DELTA * np.exp(-(bf + 2.0) / 2.0 * np.log1p(x)) * g2 / g1 - lf * g2 * (1.0 + y) / g1**2 - lr / g1
    return np.where(case == 0, base, np.where(case == 1, base - lr / g1, base + knee))


def _profile_obj(y, g1, g2, kf, bf, lf, ks, bs, ls, lr):
    x, _ = _inner_x(y, g1, g2, kf, bf, lf, lr)
    return (
        _util(x, kf, bf) + _util(y, ks, bs)
        - lf * x * (1.0 + y) / g1 - ls * y / g2 - lr * np.maximum(x / g2, y / g1)
    )


def _mu_from_case(x, y, case, g1, g2, kf, bf, lf, ks, bs, ls, lr):
    """BC multipliers consistent with the relay and source conditions."""
    ef = np.exp((bf + 2.0) / 2.0 * np.log1p(x))
    es = np.exp((bs + 2.0) / 2.0 * np.log1p(y))
    mu_f = np.zeros_like(x)
    mu_s = np.zeros_like(x)
    m = case == 0
    mu_f[m] = (DELTA * lr * ef / g2)[m]
    m = case == 1
    mu_s[m] = (DELTA * lr * es / g1)[m]
    m = case == 2
    tight_f = np.maximum(kf - lf * DELTA * (1.0 + y) * ef / g1, 0.0)
    tight_s = np.maximum((DELTA * lr - tight_f * g2 / ef) * es / g1, 0.0)
    mu_f[m], mu_s[m] = tight_f[m], tight_s[m]
    idle = (x <= 0) & (y <= 0)
    mu_f[idle] = np.maximum(kf - DELTA * lf / g1, 0.0)[idle]
    mu_s[idle] = np.maximum(ks - DELTA * ls / g2, 0.0)[idle]
    return mu_f, mu_s


def _solve_order(g1, g2, kf, bf, lf, ks, bs, ls, lr):
    """Best (x, y, value, mu_f, mu_s) with the first source decoded first."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        upper = _snr_at_slope(ks, ls / g2, bs)
    upper = np.where(np.isfinite(upper) & (upper > 0), upper, 1.0)
    params = (g1, g2, kf, bf, lf, ks, bs, ls, lr)
    y = maximize_from_derivative(_profile_h, _profile_obj, params, upper)
    x, case = _inner_x(y, g1, g2, kf, bf, lf, lr)
    value = _profile_obj(y, *params)
    mu_f, mu_s = _mu_from_case(x, y, case, *params)
    return x, y, value, mu_f, mu_s


@dataclass
class StateSolution:
    """Per-state optimum: powers, decode order, recovered BC multipliers and
    the per-state objective value."""

    p: PowerVector
    a_first: np.ndarray
    mu_a: np.ndarray
    mu_b: np.ndarray
    value: np.ndarray


def exact_state_alloc(csi: NetworkCsi, lam, kappa, qos: QosPair, fixed_order: DecodeOrder | None = None,
                      ) -> StateSolution:
    """Exact maximiser of the capped per-state problem.

    Maximises ``kA U_A(RA) + kB U_B(RB) - lam . P`` over powers and decode
    order with both MAC and broadcast limits enforced, where
    ``kappa = (kA, kB) = w / phi'``.  The relay spends only what the larger
    of the two caps needs.  With ``fixed_order`` only that order is tried;
    otherwise the better order wins and exact ties decode A first.
    """
    g1, g2, _ = csi.as_arrays()
    n = g1.size
    ka = np.broadcast_to(np.asarray(kappa[0], dtype=float), (n,))
    kb = np.broadcast_to(np.asarray(kappa[1], dtype=float), (n,))
    ba, bb = qos.beta_a, qos.beta_b
    la, lb, lr = lam
    want_a = fixed_order is None or fixed_order is DecodeOrder.A_FIRST
    want_b = fixed_order is None or fixed_order is DecodeOrder.B_FIRST
    v1 = v2 = np.full(n, -np.inf)
    if want_a:
        xa1, yb1, v1, mua1, mub1 = _solve_order(g1, g2, ka, ba, la, kb, bb, lb, lr)
    if want_b:
        yb2, xa2, v2, mub2, mua2 = _solve_order(g2, g1, kb, bb, lb, ka, ba, la, lr)
    a_first = v1 >= v2
    if not want_b:
        xa, yb, mu_a, mu_b = xa1, yb1, mua1, mub1
    elif not want_a:
        xa, yb, mu_a, mu_b = xa2, yb2, mua2, mub2
    else:
        xa, yb = np.where(a_first, xa1, xa2), np.where(a_first, yb1, yb2)
        mu_a, mu_b = np.where(a_first, mua1, mua2), np.where(a_first, mub1, mub2)
    pa = np.where(a_first, xa * (1.0 + yb), xa) / g1
    pb = np.where(a_first, yb, yb * (1.0 + xa)) / g2
    pr = np.maximum(xa / g2, yb / g1)
    return StateSolution(PowerVector(pa, pb, pr), a_first, mu_a, mu_b, np.maximum(v1, v2))


# ---------------------------------------------------------------- driver


def _fixed_rates(csi, p, order):
    mac = mac_corner_rates(p, csi, order)
    cap = bc_max_rates(p.pr, csi)
    return RatePair(np.minimum(mac.ra, cap.ra), np.minimum(mac.rb, cap.rb)), mac


def weight_order(weights: Weights) -> DecodeOrder:
    """Static rule: the smaller-weight source is decoded first; ties decode A first."""
    return DecodeOrder.B_FIRST if weights.b < weights.a else DecodeOrder.A_FIRST


def optimize_two_phase(samples: NetworkCsi, config, scheme: str = "two_phase",
                       fixed_order: DecodeOrder | None = None) -> PolicyEvaluation:
    """Optimal two-phase policy on a frozen sample set.

    Every dual step on the power multipliers solves each state exactly at
    the current ``(lam, phi')`` (decode order, source and relay powers, BC
    multipliers), then refreshes ``phi'`` from the resulting rates with
    damping 0.5.  ``fixed_order`` replaces the CSI-based partition by a
    static order.
    """
    qos, weights, budgets = config.qos, config.weights, np.asarray(config.budgets)
    n = len(samples)
    if n == 0:
        raise ValueError("need at least one channel sample")
    if not np.any(budgets > 0):
        z = np.zeros(n)
        return evaluate_policy(scheme, PowerVector(z, z.copy(), z.copy()), RatePair(z.copy(), z.copy()),
                               qos, weights, budgets)

    w = np.array([weights.a, weights.b])
    phi = np.ones(2)
    last = {}

    def evaluate(lam):
        sol = exact_state_alloc(samples, lam, w / phi, qos, fixed_order)
        p = PowerVector(*(np.where(budgets[i] > 0, v, 0.0) for i, v in enumerate((sol.p.pa, sol.p.pb, sol.p.pr))))
        rates, mac = _fixed_rates(samples, p, sol.a_first)
        ev = evaluate_policy(scheme, p, rates, qos, weights, budgets)
        expected = np.array([p.pa.mean(), p.pb.mean(), p.pr.mean()])
        active = budgets > 0
        duals = TwoPhaseDuals(*lam, sol.mu_a, sol.mu_b, *phi)
        fresh = np.array([np.mean(np.exp(-qos.theta_a * rates.ra)), np.mean(np.exp(-qos.theta_b * rates.rb))])
        phi[:] = np.minimum(0.5 * phi + 0.5 * fresh, 1.0)
        last.update(sol=sol, duals=duals, mac=mac)
        dual_value = ev.objective - float(np.dot(lam[active], expected[active] - budgets[active]))
        return Evaluation(ev, expected[active], dual_value)

    lam0 = initial_multipliers(budgets, weights, time_share=0.5)
    res, lam = run_power_dual(evaluate, budgets, config.subgradient, lam0, lower_fraction=(1e-9, 1e-9, 1e-9))
    ev = res.policy
    ev.converged = res.converged
    ev.iterations = res.iterations
    ev.extras.update(
        duals=last["duals"],
        lam=lam,
        a_first=last["sol"].a_first,
        mac_rates=last["mac"],
        phi=phi.copy(),
        trajectory=res.trajectory,
        best_dual=res.best_dual,
    )
    return ev
