"""Optimal power and rate adaptation for three-phase DF two-way relaying.

Slots: A -> R (and B overhears), B -> R (and A overhears), R broadcasts.  Per
channel state the allocation maximises a linearised per-state Lagrangian

    (wA/phi1) (1 - e^{-thA RA}) / thA + (wB/phi2) (1 - e^{-thB RB}) / thB
        - lamA PA - lamB PB - lamR PR,

where ``phi_i = E[e^{-th_i R_i}]`` is refreshed by the outer loop.  Relayed
directions keep the DF bottleneck balanced, which ties PR to the source power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_model import NetworkCsi, REGION_TAGS, three_phase_region_codes
from .effective_capacity import LN2, QosPair, RatePair, Weights
from .numerics import SubgradientConfig, dual_ascent, Evaluation, maximize_from_derivative
from .policy import PolicyEvaluation, evaluate_policy
from .rate_regions import PowerVector, capacity, three_phase_max_rates

__all__ = [
    "SIGMA",
    "ThreePhaseDuals",
    "allocate",
    "alloc_r1",
    "alloc_r2",
    "alloc_r3",
    "alloc_r4",
    "assign_rates",
    "ergodic_alloc_r1",
    "state_lagrangian",
    "stationarity_residuals",
    "relay_tie",
    "optimize_three_phase",
]

SIGMA = 3.0 * LN2

# Multiplier used in place of "infinity" for a zero power budget.
_ZERO_BUDGET_LAMBDA = 1e12


@dataclass(frozen=True)
class ThreePhaseDuals:
    lam_a: float
    lam_b: float
    lam_r: float
    phi1: float = 1.0
    phi2: float = 1.0

    def __post_init__(self) -> None:
        if min(self.lam_a, self.lam_b, self.lam_r) < 0:
            raise ValueError("power multipliers must be nonnegative")
        if not (0 < self.phi1 <= 1 and 0 < self.phi2 <= 1):
            raise ValueError("phi must lie in (0, 1]")

    def swapped(self) -> "ThreePhaseDuals":
        return ThreePhaseDuals(self.lam_b, self.lam_a, self.lam_r, self.phi2, self.phi1)


def relay_tie(g_src, g_dst, g3, p):
    """Relay power that makes the relayed rate equal the source-relay rate."""
    with np.errstate(divide="ignore", invalid="ignore"):
        pr = (g_src - g3) * p / (g_dst * (1.0 + g3 * p))
    return np.where(p > 0, pr, 0.0)


def _closed_form(g3, lam, phi, omega, beta):
    """Direct-link QoS water-filling with a 1/3 time share."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        level = (SIGMA * lam * phi / omega) ** (-3.0 / (beta + 3.0))
        p = level * g3 ** (-beta / (beta + 3.0)) - 1.0 / g3
    return np.where((g3 > 0) & (p > 0), p, 0.0)


def _utility(snr, a, beta):
    # (w/phi) (1 - e^{-theta R}) / theta with R = C(snr)/3 and a = w/(sigma phi)
    return (3.0 * a / beta) * -np.expm1(-(beta / 3.0) * np.log1p(snr))


def _marginal(snr, g, a, beta):
    return a * g * np.exp(-(beta + 3.0) / 3.0 * np.log1p(snr))


# One relayed direction, the other direct (region R2; R3 by swapping).
def _single_f(p, g1, g3, a, beta, lam, cr):
    return _marginal(g1 * p, g1, a, beta) - cr / (1.0 + g3 * p) ** 2 - lam


def _single_obj(p, g1, g3, a, beta, lam, cr):
    return _utility(g1 * p, a, beta) - lam * p - cr * p / (1.0 + g3 * p)


# Both relayed, A leading (tau <= 1): PB follows from the common relay power.
def _pair_pb(p, g3, tau):
    return tau * p / (1.0 + (1.0 - tau) * g3 * p)


def _pair_f(p, g1, g2, g3, tau, aa, ba, la, ab, bb, lb, cr):
    d = 1.0 + (1.0 - tau) * g3 * p
    pb = tau * p / d
    return (
        _marginal(g1 * p, g1, aa, ba)
        + tau / d**2 * (_marginal(g2 * pb, g2, ab, bb) - lb)
        - cr / (1.0 + g3 * p) ** 2
        - la
    )


def _pair_obj(p, g1, g2, g3, tau, aa, ba, la, ab, bb, lb, cr):
    pb = _pair_pb(p, g3, tau)
    return (
        _utility(g1 * p, aa, ba)
        + _utility(g2 * pb, ab, bb)
        - la * p
        - lb * pb
        - cr * p / (1.0 + g3 * p)
    )


def _upper_guess(g, a, beta, lam):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = ((a * g / lam) ** (3.0 / (beta + 3.0)) - 1.0) / g
    return np.where(np.isfinite(u) & (u > 1.0 / g), u, 1.0 / np.maximum(g, 1e-300))


def _relay_coeff(lam_r, g_src, g_dst, g3):
    with np.errstate(divide="ignore", invalid="ignore"):
        c = lam_r * (g_src - g3) / g_dst
    return np.where(lam_r > 0, c, 0.0)


def _solve_single(g1, g2, g3, a, beta, lam, lam_r):
    cr = _relay_coeff(lam_r, g1, g2, g3)
    params = (g1, g3, a, beta, lam, cr)
    return maximize_from_derivative(_single_f, _single_obj, params, _upper_guess(g1, a, beta, lam))


def _solve_pair(g1, g2, g3, tau, aa, ba, la, ab, bb, lb, lam_r):
    cr = _relay_coeff(lam_r, g1, g2, g3)
    params = (g1, g2, g3, tau, aa, ba, la, ab, bb, lb, cr)
    upper = np.maximum(_upper_guess(g1, aa, ba, la), _upper_guess(g2, ab, bb, lb))
    pa = maximize_from_derivative(_pair_f, _pair_obj, params, upper)
    return pa, _pair_pb(pa, g3, tau)


def _as_arrays(duals: ThreePhaseDuals, qos: QosPair, weights: Weights):
    a_a = weights.a / (SIGMA * duals.phi1)
    a_b = weights.b / (SIGMA * duals.phi2)
    return a_a, a_b


def allocate(csi: NetworkCsi, duals: ThreePhaseDuals, qos: QosPair, weights: Weights):
    """Optimal per-state powers for every sample; returns (PowerVector, region codes)."""
    g1, g2, g3 = csi.as_arrays()
    codes = three_phase_region_codes(csi)
    n = g1.size
    pa, pb, pr = np.zeros(n), np.zeros(n), np.zeros(n)
    ba, bb = qos.beta_a, qos.beta_b
    aa, ab = _as_arrays(duals, qos, weights)
    la, lb, lr = duals.lam_a, duals.lam_b, duals.lam_r

    direct_a = (codes == 1) | (codes == 3)
    direct_b = (codes == 1) | (codes == 2)
    pa[direct_a] = _closed_form(g3[direct_a], la, duals.phi1, weights.a, ba)
    pb[direct_b] = _closed_form(g3[direct_b], lb, duals.phi2, weights.b, bb)

    m = codes == 2
    if m.any():
        pa[m] = _solve_single(g1[m], g2[m], g3[m], aa, ba, la, lr)
        pr[m] = relay_tie(g1[m], g2[m], g3[m], pa[m])
    m = codes == 3
    if m.any():
        pb[m] = _solve_single(g2[m], g1[m], g3[m], ab, bb, lb, lr)
        pr[m] = relay_tie(g2[m], g1[m], g3[m], pb[m])

    m4 = codes == 4
    if m4.any():
        tau = g1 * (g1 - g3) / np.where(m4, g2 * (g2 - g3), 1.0)
        m = m4 & (tau <= 1.0)
        if m.any():
            pa[m], pb[m] = _solve_pair(g1[m], g2[m], g3[m], tau[m], aa, ba, la, ab, bb, lb, lr)
            pr[m] = relay_tie(g1[m], g2[m], g3[m], pa[m])
        m = m4 & (tau > 1.0)
        if m.any():
            pb[m], pa[m] = _solve_pair(g2[m], g1[m], g3[m], 1.0 / tau[m], ab, bb, lb, aa, ba, la, lr)
            pr[m] = relay_tie(g2[m], g1[m], g3[m], pb[m])
    return PowerVector(pa, pb, pr), codes


def _scalar(csi: NetworkCsi, duals, qos, weights, region: str) -> PowerVector:
    got = REGION_TAGS[int(three_phase_region_codes(csi)[0]) - 1]
    if got != region:
        raise ValueError(f"channel state lies in {got}, not {region}")
    p, _ = allocate(csi, duals, qos, weights)
    return PowerVector(float(p.pa[0]), float(p.pb[0]), float(p.pr[0]))


def alloc_r1(csi, duals, qos, weights) -> PowerVector:
    """Both sources below the direct link: closed-form powers, relay silent."""
    return _scalar(csi, duals, qos, weights, "R1")


def alloc_r2(csi, duals, qos, weights) -> PowerVector:
    """A relayed with a balanced bottleneck, B direct."""
    return _scalar(csi, duals, qos, weights, "R2")


def alloc_r3(csi, duals, qos, weights) -> PowerVector:
    """Mirror of :func:`alloc_r2` with the sources exchanged."""
    p = alloc_r2(csi.swapped(), duals.swapped(), qos.swapped(), weights.swapped())
    return PowerVector(p.pb, p.pa, p.pr)


def alloc_r4(csi, duals, qos, weights) -> PowerVector:
    """Both relayed; one relay power balances both bottlenecks."""
    return _scalar(csi, duals, qos, weights, "R4")


def assign_rates(csi: NetworkCsi, p: PowerVector, region) -> RatePair:
    """Boundary rates of the region: min-form for relayed directions."""
    if isinstance(region, str):
        code = REGION_TAGS.index(region) + 1
        relayed_a, relayed_b = code in (2, 4), code in (3, 4)
    else:
        code = np.asarray(region)
        relayed_a, relayed_b = (code == 2) | (code == 4), (code == 3) | (code == 4)
    g1, g2, g3 = csi.g1, csi.g2, csi.g3
    direct_a, direct_b = capacity(g3 * p.pa), capacity(g3 * p.pb)
    ra = np.where(relayed_a, np.minimum(capacity(g1 * p.pa), direct_a + capacity(g2 * p.pr)), direct_a) / 3.0
    rb = np.where(relayed_b, np.minimum(capacity(g2 * p.pb), direct_b + capacity(g1 * p.pr)), direct_b) / 3.0
    if np.ndim(ra) == 0:
        return RatePair(float(ra), float(rb))
    return RatePair(ra, rb)


def ergodic_alloc_r1(csi: NetworkCsi, duals: ThreePhaseDuals, weights: Weights) -> PowerVector:
    """Plain water-filling on the direct link (the theta -> 0 limit of R1)."""
    g3 = np.asarray(csi.g3, dtype=float)
    with np.errstate(divide="ignore"):
        pa = np.maximum(weights.a / (SIGMA * duals.lam_a) - 1.0 / g3, 0.0)
        pb = np.maximum(weights.b / (SIGMA * duals.lam_b) - 1.0 / g3, 0.0)
    if np.ndim(pa) == 0:
        return PowerVector(float(pa), float(pb), 0.0)
    return PowerVector(pa, pb, np.zeros_like(pa))


def state_lagrangian(p: PowerVector, csi: NetworkCsi, duals: ThreePhaseDuals, qos: QosPair, weights: Weights):
    """Per-state integrand that the allocation maximises."""
    r = three_phase_max_rates(p, csi)
    ua = weights.a / duals.phi1 * -np.expm1(-qos.theta_a * np.asarray(r.ra)) / qos.theta_a
    ub = weights.b / duals.phi2 * -np.expm1(-qos.theta_b * np.asarray(r.rb)) / qos.theta_b
    return ua + ub - duals.lam_a * p.pa - duals.lam_b * p.pb - duals.lam_r * p.pr


def stationarity_residuals(csi: NetworkCsi, p: PowerVector, duals: ThreePhaseDuals, qos: QosPair, weights: Weights):
    """Residual of the stationarity equation of each sample's leading power.

    R1 and the direct side of R2/R3 use the closed-form condition; relayed
    regions use the tied condition in the leading source power.  NaN where
    the leading power is clamped at zero.
    """
    g1, g2, g3 = csi.as_arrays()
    pa, pb = np.atleast_1d(p.pa).astype(float), np.atleast_1d(p.pb).astype(float)
    codes = three_phase_region_codes(csi)
    aa, ab = _as_arrays(duals, qos, weights)
    ba, bb = qos.beta_a, qos.beta_b
    la, lb = duals.lam_a, duals.lam_b
    cra = _relay_coeff(duals.lam_r, g1, g2, g3)
    crb = _relay_coeff(duals.lam_r, g2, g1, g3)
    res = np.full(g1.size, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.abs(_marginal(g3 * pa, g3, aa, ba) - la)
        m = (codes == 1) & (pa > 0)
        res[m] = direct[m]
        m = (codes == 2) & (pa > 0)
        res[m] = np.abs(_single_f(pa, g1, g3, aa, ba, la, cra))[m]
        m = (codes == 3) & (pb > 0)
        res[m] = np.abs(_single_f(pb, g2, g3, ab, bb, lb, crb))[m]
        tau = g1 * (g1 - g3) / (g2 * (g2 - g3))
        m = (codes == 4) & (tau <= 1) & (pa > 0)
        res[m] = np.abs(_pair_f(pa, g1, g2, g3, tau, aa, ba, la, ab, bb, lb, cra))[m]
        m = (codes == 4) & (tau > 1) & (pb > 0)
        res[m] = np.abs(_pair_f(pb, g2, g1, g3, 1 / tau, ab, bb, lb, aa, ba, la, crb))[m]
    return res


def initial_multipliers(budgets, weights: Weights, time_share: float = 1.0 / 3.0):
    """Rough starting multipliers: ergodic water-filling with a unit gain."""
    ln2 = LN2 / time_share
    pa, pb, pr = budgets
    # a zero weight still needs a positive price, or its power is unbounded
    wa, wb = max(weights.a, 1e-3), max(weights.b, 1e-3)
    la = wa / (ln2 * (pa + 1.0))
    lb = wb / (ln2 * (pb + 1.0))
    return np.array([la, lb, 0.5 * (la + lb)])


def _zero_policy(scheme, n, qos, weights, budgets):
    z = np.zeros(n)
    return evaluate_policy(
        scheme, PowerVector(z, z.copy(), z.copy()), RatePair(z.copy(), z.copy()), qos, weights, budgets
    )


def run_power_dual(evaluate_lam, budgets, cfg: SubgradientConfig, lam0, lower_fraction=(1e-9, 1e-9, 0.0)):
    """Dual ascent over the coordinates with a positive budget.

    Zero-budget coordinates keep a prohibitive multiplier so the matching
    power is driven to zero.  Multipliers whose zero value would make the
    per-state problem unbounded are projected onto ``lam >= fraction * lam0``.
    """
    budgets = np.asarray(budgets, dtype=float)
    active = budgets > 0

    def full(sub):
        lam = np.full(budgets.size, _ZERO_BUDGET_LAMBDA)
        lam[active] = sub
        return lam

    def evaluate(sub):
        return evaluate_lam(full(sub))

    lam0 = np.asarray(lam0, dtype=float)
    lower = (np.asarray(lower_fraction) * lam0)[active]
    res = dual_ascent(evaluate, lam0[active], budgets[active], cfg, lower=lower)
    return res, full(res.lam)


def optimize_three_phase(samples: NetworkCsi, config, scheme: str = "three_phase") -> PolicyEvaluation:
    """Optimal three-phase policy on a frozen sample set.

    Every dual step allocates with the current (lambda, phi), then refreshes
    phi from the resulting rates with damping 0.5.
    """
    qos, weights, budgets = config.qos, config.weights, np.asarray(config.budgets)
    if len(samples) == 0:
        raise ValueError("need at least one channel sample")
    if not np.any(budgets > 0):
        return _zero_policy(scheme, len(samples), qos, weights, budgets)

    phi = np.ones(2)
    last = {}

    def evaluate(lam):
        duals = ThreePhaseDuals(*lam, *np.minimum(phi, 1.0))
        p, codes = allocate(samples, duals, qos, weights)
        p = PowerVector(*(np.where(budgets[i] > 0, v, 0.0) for i, v in enumerate((p.pa, p.pb, p.pr))))
        r = three_phase_max_rates(p, samples)
        expected = np.array([p.pa.mean(), p.pb.mean(), p.pr.mean()])
        ev = evaluate_policy(scheme, p, r, qos, weights, budgets)
        fresh = np.array([np.mean(np.exp(-qos.theta_a * r.ra)), np.mean(np.exp(-qos.theta_b * r.rb))])
        phi[:] = 0.5 * phi + 0.5 * fresh
        last.update(codes=codes, phi=phi.copy(), duals=duals)
        active = budgets > 0
        dual_value = ev.objective - float(np.dot(lam[active], expected[active] - budgets[active]))
        return Evaluation(ev, expected[active], dual_value)

    lam0 = initial_multipliers(budgets, weights)
    res, lam = run_power_dual(evaluate, budgets, config.subgradient, lam0)
    ev = res.policy
    ev.converged = res.converged
    ev.iterations = res.iterations
    ev.extras.update(
        duals=last["duals"],
        lam=lam,
        regions=last["codes"],
        phi=last["phi"],
        trajectory=res.trajectory,
        best_dual=res.best_dual,
    )
    return ev
