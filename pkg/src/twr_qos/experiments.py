"""Sweeps over the scenario with common random numbers, and their emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import direct_transmission_policy, fixed_power_policy, weight_based_partition_policy
from .channel_model import NetworkCsi, sample_csi
from .config import SCHEMES, ScenarioConfig, emit_config
from .policy import PolicyEvaluation
from .three_phase import optimize_three_phase
from .two_phase import optimize_two_phase

__all__ = [
    "SWEEPS",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "run_scheme",
    "run_point",
    "run_sweep",
    "emit_results",
    "COLUMNS",
]

# sweep variable -> how a grid value rewrites the scenario
SWEEPS = {
    "power_db": lambda cfg, v: cfg.with_source_power(v),
    "theta": lambda cfg, v: cfg.replace(theta_a=v, theta_b=v),
    "theta_a": lambda cfg, v: cfg.replace(theta_a=v),
    "theta_b": lambda cfg, v: cfg.replace(theta_b=v),
    "relay_distance": lambda cfg, v: cfg.replace(relay_distance=v),
    "weight_a": lambda cfg, v: cfg.replace(weight_a=v),
}

COLUMNS = (
    "sweep_var", "value", "scheme", "objective", "ec_A", "ec_B",
    "resid_PA", "resid_PB", "resid_PR", "converged", "iterations", "seed",
)


def run_scheme(samples: NetworkCsi, config: ScenarioConfig, scheme: str) -> PolicyEvaluation:
    """Evaluate one named scheme on a frozen sample set."""
    if scheme == "direct":
        return direct_transmission_policy(samples, config)
    if scheme == "three_phase":
        return optimize_three_phase(samples, config)
    if scheme == "two_phase":
        return optimize_two_phase(samples, config)
    if scheme == "two_phase_weight":
        return weight_based_partition_policy(samples, config)
    if scheme.endswith("_fixed") and scheme in SCHEMES:
        return fixed_power_policy(samples, config, scheme[: -len("_fixed")])
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    grid: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.variable not in SWEEPS:
            raise ValueError(f"unknown sweep variable {self.variable!r}; choose from {', '.join(SWEEPS)}")
        if not self.grid:
            raise ValueError("sweep grid is empty")
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))


@dataclass(frozen=True)
class SweepRow:
    value: float
    scheme: str
    objective: float
    ec_a: float
    ec_b: float
    residuals: tuple[float, float, float]
    converged: bool
    iterations: int

    @classmethod
    def from_policy(cls, value: float, ev: PolicyEvaluation) -> "SweepRow":
        return cls(value, ev.scheme, float(ev.objective), float(ev.ec_a), float(ev.ec_b),
                   tuple(float(r) for r in ev.residuals), bool(ev.converged), int(ev.iterations))


@dataclass
class SweepResult:
    variable: str
    grid: tuple[float, ...]
    rows: list[SweepRow]
    seed: int
    config: ScenarioConfig
    policies: dict = field(default_factory=dict, repr=False, compare=False)

    def series(self, scheme: str, converged_only: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """(grid values, objectives) of one scheme; unconverged points are dropped
        unless ``converged_only`` is False."""
        rows = [r for r in self.rows if r.scheme == scheme and (r.converged or not converged_only)]
        return np.array([r.value for r in rows]), np.array([r.objective for r in rows])

    def argmax(self, scheme: str) -> float:
        x, y = self.series(scheme)
        if x.size == 0:
            raise ValueError(f"no converged points for {scheme!r}")
        return float(x[int(np.argmax(y))])

    def unconverged(self) -> list[SweepRow]:
        return [r for r in self.rows if not r.converged]

    def monotonicity_violations(self, tol: float = 0.0) -> list[tuple[str, float, float]]:
        """Grid steps where some scheme's objective increases by more than ``tol``."""
        out = []
        for scheme in sorted({r.scheme for r in self.rows}):
            x, y = self.series(scheme, converged_only=False)
            for k in np.nonzero(np.diff(y) > tol)[0]:
                out.append((scheme, float(x[k]), float(x[k + 1])))
        return out


def _schemes(config: ScenarioConfig, schemes) -> list[str]:
    return sorted(schemes if schemes is not None else config.protocols)


def run_point(config: ScenarioConfig, samples: NetworkCsi | None = None, schemes=None) -> list[PolicyEvaluation]:
    """All selected schemes at one scenario, sharing one sample set."""
    if samples is None:
        samples = sample_csi(config.fading, config.samples, config.seed)
    return [run_scheme(samples, config, s) for s in _schemes(config, schemes)]


def run_sweep(config: ScenarioConfig, spec: SweepSpec, schemes=None, keep_policies: bool = False) -> SweepResult:
    """Run every selected scheme at every grid point.

    All points reuse the same uniform draws, so only the swept quantity
    changes between them; for the relay sweep the draws are rescaled to the
    new mean gains.
    """
    names = _schemes(config, schemes)
    rows, policies = [], {}
    base = sample_csi(config.fading, config.samples, config.seed)
    for value in spec.grid:
        cfg = SWEEPS[spec.variable](config, value)
        samples = base if cfg.fading == config.fading else sample_csi(cfg.fading, cfg.samples, cfg.seed)
        for ev in run_point(cfg, samples, names):
            rows.append(SweepRow.from_policy(value, ev))
            if keep_policies:
                policies[(value, ev.scheme)] = ev
    return SweepResult(spec.variable, spec.grid, rows, config.seed, config, policies)


def _num(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _records(result: SweepResult) -> list[dict]:
    order = {v: i for i, v in enumerate(result.grid)}
    rows = sorted(result.rows, key=lambda r: (order[r.value], r.scheme))
    return [
        {
            "sweep_var": result.variable,
            "value": r.value,
            "scheme": r.scheme,
            "objective": r.objective,
            "ec_A": r.ec_a,
            "ec_B": r.ec_b,
            "resid_PA": r.residuals[0],
            "resid_PB": r.residuals[1],
            "resid_PR": r.residuals[2],
            "converged": r.converged,
            "iterations": r.iterations,
            "seed": result.seed,
        }
        for r in rows
    ]


def emit_results(result: SweepResult, fmt: str = "csv") -> str:
    """CSV or JSON document; 12 significant digits, grid-major then scheme order."""
    records = _records(result)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in records:
            writer.writerow([
                _num(v) if isinstance(v, float) else (str(v).lower() if isinstance(v, bool) else v)
                for v in (rec[c] for c in COLUMNS)
            ])
        return buf.getvalue()
    if fmt == "json":
        def clean(v):
            if isinstance(v, float):
                return float(_num(v)) if math.isfinite(v) else None
            return v

        doc = {
            "sweep_var": result.variable,
            "grid": [clean(v) for v in result.grid],
            "seed": result.seed,
            "config": emit_config(result.config),
            "rows": [{k: clean(v) for k, v in rec.items()} for rec in records],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}; use 'csv' or 'json'")
