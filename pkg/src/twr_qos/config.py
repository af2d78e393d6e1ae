"""Scenario description and its line-oriented ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .channel_model import FadingSpec, make_fading_spec
from .effective_capacity import QosPair, Weights
from .numerics import RootSearchConfig, SubgradientConfig

__all__ = [
    "SCHEMES",
    "ConfigError",
    "ScenarioConfig",
    "db_to_linear",
    "parse_config",
    "emit_config",
]

SCHEMES = (
    "direct",
    "three_phase",
    "three_phase_fixed",
    "two_phase",
    "two_phase_fixed",
    "two_phase_weight",
    "two_phase_weight_fixed",
)


class ConfigError(ValueError):
    """Invalid scenario; ``line`` is set when the offending key came from a file."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.message = message


def db_to_linear(db: float) -> float:
    return 0.0 if db == -math.inf else 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that defines one experiment.

    Power budgets are given in dB (``-inf`` means a zero budget) and converted
    to linear once, on construction.
    """

    relay_distance: float = 1.0
    path_loss_exponent: float = 4.0
    power_a_db: float = 9.0
    power_b_db: float = 9.0
    power_r_db: float = 6.0
    weight_a: float = 0.6
    theta_a: float = 1.0
    theta_b: float = 1.0
    samples: int = 20_000
    seed: int = 1
    protocols: tuple[str, ...] = ("direct", "three_phase", "two_phase")
    tolerance_power: float = 1e-3
    tolerance_root: float = 1e-10
    max_iterations: int = 500
    step_schedule: str = "adaptive"
    step_size: float = 1.0

    def __post_init__(self) -> None:
        try:
            make_fading_spec(self.relay_distance, self.path_loss_exponent)
        except ValueError as exc:
            field = "relay_distance" if "relay" in str(exc) else "path_loss_exponent"
            raise ConfigError(str(exc), field) from None
        for name in ("power_a_db", "power_b_db", "power_r_db"):
            v = getattr(self, name)
            if math.isnan(v) or v == math.inf:
                raise ConfigError(f"{name} must be a finite dB value or -inf", name)
        if not 0.0 <= self.weight_a <= 1.0:
            raise ConfigError(f"weight_a must lie in [0, 1], got {self.weight_a}", "weight_a")
        for name in ("theta_a", "theta_b"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive, got {v}", name)
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}", "samples")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}", "seed")
        if not self.protocols:
            raise ConfigError("protocols must name at least one scheme", "protocols")
        for p in self.protocols:
            if p not in SCHEMES:
                raise ConfigError(f"unknown scheme {p!r}; choose from {', '.join(SCHEMES)}", "protocols")
        for name in ("tolerance_power", "tolerance_root", "step_size"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", name)
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1", "max_iterations")
        if self.step_schedule not in ("constant", "diminishing", "adaptive"):
            raise ConfigError(f"unknown step schedule {self.step_schedule!r}", "step_schedule")
        budgets = tuple(db_to_linear(getattr(self, n)) for n in ("power_a_db", "power_b_db", "power_r_db"))
        object.__setattr__(self, "_budgets", budgets)

    @property
    def budgets(self) -> tuple[float, float, float]:
        """Linear average-power budgets (A, B, relay)."""
        return self._budgets

    @property
    def weights(self) -> Weights:
        return Weights.from_a(self.weight_a)

    @property
    def qos(self) -> QosPair:
        return QosPair(self.theta_a, self.theta_b)

    @property
    def fading(self) -> FadingSpec:
        return make_fading_spec(self.relay_distance, self.path_loss_exponent)

    @property
    def root_config(self) -> RootSearchConfig:
        return RootSearchConfig(tolerance=self.tolerance_root)

    @property
    def subgradient(self) -> SubgradientConfig:
        return SubgradientConfig(
            schedule=self.step_schedule,
            step=self.step_size,
            max_iterations=self.max_iterations,
            constraint_tolerance=self.tolerance_power,
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_source_power(self, db: float) -> "ScenarioConfig":
        """Both sources at ``db``, relay 3 dB lower."""
        return self.replace(power_a_db=db, power_b_db=db, power_r_db=db - 3.0)


_FLOAT_KEYS = {
    "relay_distance",
    "path_loss_exponent",
    "power_a_db",
    "power_b_db",
    "power_r_db",
    "weight_a",
    "theta_a",
    "theta_b",
    "tolerance_power",
    "tolerance_root",
    "step_size",
}
_INT_KEYS = {"samples", "seed", "max_iterations"}
_KEYS = _FLOAT_KEYS | _INT_KEYS | {"protocols", "step_schedule", "weights"}


def _convert(key: str, raw: str, line: int):
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as a number", key, line) from None
    if key == "protocols":
        return tuple(raw.replace(",", " ").split())
    if key == "weights":
        parts = raw.replace(",", " ").split()
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"weights: cannot read {raw!r} as numbers", key, line) from None
        if len(values) != 2:
            raise ConfigError("weights needs exactly two values", key, line)
        try:
            Weights(*values)
        except ValueError as exc:
            raise ConfigError(str(exc), key, line) from None
        return values[0]
    return raw


def parse_config(text: str) -> ScenarioConfig:
    """Read a ``key = value`` document; ``#`` starts a comment.

    Missing keys take the defaults.  When only ``power_a_db`` is given, B
    follows A and the relay sits 3 dB below.
    """
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", line=lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", key, lineno)
        target = "weight_a" if key == "weights" else key
        if target in values:
            raise ConfigError(f"{target} given twice (first on line {lines[target]})", key, lineno)
        values[target] = _convert(key, raw, lineno)
        lines[target] = lineno

    if "power_a_db" in values:
        values.setdefault("power_b_db", values["power_a_db"])
        values.setdefault("power_r_db", values["power_a_db"] - 3.0)
    try:
        return ScenarioConfig(**values)
    except ConfigError as exc:
        raise ConfigError(exc.message, exc.field, lines.get(exc.field)) from None


def emit_config(cfg: ScenarioConfig) -> str:
    """Inverse of :func:`parse_config`: ``parse_config(emit_config(c)) == c``."""
    out = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = " ".join(v)
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"
