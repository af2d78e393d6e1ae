"""Self-checks: allocators against brute-force oracles, stationarity, feasibility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracles
from . import three_phase as tp3
from . import two_phase as tp2
from .channel_model import NetworkCsi, sample_csi
from .effective_capacity import QosPair, Weights
from .rate_regions import DecodeOrder, PowerVector, three_phase_max_rates, two_phase_region_contains

__all__ = ["Check", "PATHS", "draw_state", "oracle_checks", "kkt_checks", "feasibility_checks", "run_all"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


PATHS = ("R1", "R2", "R3", "R4_tau_le_1", "R4_tau_gt_1", "two_phase_sources", "bc_relay")


def draw_state(rng: np.random.Generator, path: str) -> NetworkCsi:
    """Random channel state inside the region a three-phase path needs."""
    g3 = rng.uniform(0.2, 2.0)
    lo, hi = rng.uniform(0.05, 0.95, 2) * g3, g3 * (1.0 + rng.uniform(0.05, 3.0, 2))
    if path == "R1":
        return NetworkCsi(lo[0], lo[1], g3)
    if path == "R2":
        return NetworkCsi(hi[0], lo[1], g3)
    if path == "R3":
        return NetworkCsi(lo[0], hi[1], g3)
    a, b = sorted(hi)
    if path == "R4_tau_le_1":
        return NetworkCsi(a, b, g3)
    if path == "R4_tau_gt_1":
        return NetworkCsi(b, a, g3)
    return NetworkCsi(*rng.exponential(1.0, 3))


def _qos(rng) -> QosPair:
    return QosPair(*rng.choice([0.1, 0.5, 1.0, 3.0], 2))


def _weights(rng) -> Weights:
    return Weights.from_a(float(rng.uniform(0.2, 0.8)))


def oracle_checks(draws: int = 20, seed: int = 0, power_tol: float = 1e-3, value_tol: float = 1e-6) -> list[Check]:
    """Every allocation path against its grid oracle on ``draws`` random cases."""
    rng = np.random.default_rng(seed)
    out = []
    for path in PATHS:
        worst_p = worst_v = 0.0
        for _ in range(draws):
            csi, q, w = draw_state(rng, path), _qos(rng), _weights(rng)
            if path.startswith("R"):
                d = tp3.ThreePhaseDuals(*rng.uniform(0.02, 0.2, 3), *rng.uniform(0.5, 1.0, 2))
                arr = NetworkCsi(*(np.array([v]) for v in (csi.g1, csi.g2, csi.g3)))
                p, _ = tp3.allocate(arr, d, q, w)
                got = PowerVector(float(p.pa[0]), float(p.pb[0]), float(p.pr[0]))
                ref, ref_val = oracles.three_phase_oracle(csi, d, q, w)
                val = float(tp3.state_lagrangian(got, csi, d, q, w))
                err = max(abs(got.pa - ref.pa), abs(got.pb - ref.pb), abs(got.pr - ref.pr))
            elif path == "two_phase_sources":
                d = tp2.TwoPhaseDuals(*rng.uniform(0.03, 0.2, 3), *rng.uniform(0.0, 0.2, 2), *rng.uniform(0.6, 1.0, 2))
                pa, pb = tp2.source_alloc(csi, d, q, w, DecodeOrder.A_FIRST)
                ra, rb, ref_val = oracles.two_phase_source_oracle(csi, d, q, w)
                val = float(tp2.state_lagrangian(PowerVector(pa, pb, 0.0), csi, DecodeOrder.A_FIRST, d, q, w))
                err = max(abs(pa - ra), abs(pb - rb))
            else:
                mu_a, mu_b, lam_r = rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5), rng.uniform(0.02, 0.2)
                pr = tp2.relay_alloc(csi, mu_a, mu_b, lam_r, q)
                ref, ref_val = oracles.relay_oracle(csi, mu_a, mu_b, lam_r, q)
                val = float(_relay_value(csi, pr, mu_a, mu_b, lam_r, q))
                err = abs(pr - ref)
            worst_p = max(worst_p, err)
            worst_v = max(worst_v, ref_val - val)
        ok = worst_p <= power_tol and worst_v <= value_tol
        out.append(Check(f"oracle {path}", ok, f"max |dP| = {worst_p:.2e}, max oracle gain = {worst_v:.2e}"))
    return out


def _relay_value(csi, pr, mu_a, mu_b, lam_r, q: QosPair):
    ca = np.log2(1.0 + csi.g2 * pr) / 2.0
    cb = np.log2(1.0 + csi.g1 * pr) / 2.0
    return mu_a * -np.expm1(-q.theta_a * ca) / q.theta_a + mu_b * -np.expm1(-q.theta_b * cb) / q.theta_b - lam_r * pr


def kkt_checks(n: int = 4000, seed: int = 0, tol: float = 1e-8) -> list[Check]:
    """Stationarity residuals of interior allocations on random states."""
    from .channel_model import make_fading_spec

    rng = np.random.default_rng(seed)
    csi = sample_csi(make_fading_spec(1.0, 4.0), n, seed)
    q, w = QosPair(1.0, 0.5), Weights(0.6, 0.4)
    d3 = tp3.ThreePhaseDuals(0.05, 0.04, 0.03, 0.8, 0.7)
    p3, _ = tp3.allocate(csi, d3, q, w)
    r3 = tp3.stationarity_residuals(csi, p3, d3, q, w)
    mu = rng.uniform(0.0, 0.3, (2, n))
    d2 = tp2.TwoPhaseDuals(0.05, 0.04, 0.03, mu[0], mu[1], 0.8, 0.7)
    a_first = rng.random(n) < 0.5
    pa, pb = tp2.source_alloc(csi, d2, q, w, a_first)
    ra, rb = tp2.source_stationarity(csi, pa, pb, d2, q, w, a_first)
    pr = tp2.relay_alloc(csi, mu[0], mu[1], 0.03, q)
    g1, g2, _ = csi.as_arrays()
    rr = np.where(pr > 0, tp2.relay_stationarity(pr, g1, g2, mu[0], mu[1], q, 0.03), np.nan)
    out = []
    for name, r in (("three-phase", r3), ("two-phase sources (A)", ra), ("two-phase sources (B)", rb),
                    ("two-phase relay", rr)):
        worst = float(np.nanmax(np.abs(r))) if np.any(np.isfinite(r)) else 0.0
        out.append(Check(f"stationarity {name}", worst <= tol,
                         f"max residual {worst:.2e} over {int(np.sum(np.isfinite(r)))} interior states"))
    return out


def feasibility_checks(config=None, n: int = 4000) -> list[Check]:
    """Budgets met and emitted rates inside the achievable regions."""
    from .config import ScenarioConfig

    cfg = (config or ScenarioConfig()).replace(samples=n)
    samples = sample_csi(cfg.fading, n, cfg.seed)
    out = []
    ev3 = tp3.optimize_three_phase(samples, cfg)
    ev2 = tp2.optimize_two_phase(samples, cfg)
    for ev in (ev3, ev2):
        resid = float(np.max(np.abs(ev.residuals)))
        out.append(Check(f"budgets {ev.scheme}", ev.converged and resid <= cfg.tolerance_power,
                         f"converged={ev.converged}, max |relative residual| = {resid:.2e}"))
    cap = three_phase_max_rates(ev3.powers, samples)
    over = max(float(np.max(ev3.rates.ra - cap.ra)), float(np.max(ev3.rates.rb - cap.rb)))
    out.append(Check("region three_phase", over <= 1e-9, f"max excess over the region {over:.2e}"))
    inside = two_phase_region_contains(ev2.rates, ev2.powers, samples, tol=1e-6)
    out.append(Check("region two_phase", bool(np.all(inside)), f"{int(np.sum(~np.asarray(inside)))} states outside"))
    return out


def run_all(quick: bool = True) -> list[Check]:
    draws = 20 if quick else 50
    return oracle_checks(draws) + kkt_checks() + feasibility_checks(n=4000 if quick else 20000)
