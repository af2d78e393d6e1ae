"""QoS-driven power and rate adaptation for decode-and-forward two-way relaying."""

from .channel_model import FadingSpec, NetworkCsi, make_fading_spec, sample_csi
from .config import ScenarioConfig, parse_config, emit_config
from .baselines import direct_transmission_policy, fixed_power_policy, weight_based_partition_policy
from .effective_capacity import QosPair, RatePair, Weights, effective_capacity
from .policy import PolicyEvaluation
from .experiments import SweepSpec, emit_results, run_point, run_sweep
from .rate_regions import DecodeOrder, PowerVector
from .three_phase import optimize_three_phase
from .two_phase import optimize_two_phase

__all__ = [
    "FadingSpec",
    "NetworkCsi",
    "make_fading_spec",
    "sample_csi",
    "ScenarioConfig",
    "parse_config",
    "emit_config",
    "QosPair",
    "RatePair",
    "Weights",
    "effective_capacity",
    "PolicyEvaluation",
    "DecodeOrder",
    "PowerVector",
    "optimize_three_phase",
    "optimize_two_phase",
    "direct_transmission_policy",
    "fixed_power_policy",
    "weight_based_partition_policy",
    "SweepSpec",
    "run_point",
    "run_sweep",
    "emit_results",
]
