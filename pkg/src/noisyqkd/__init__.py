"""Key-rate analysis for coherent-state CV-QKD with noisy preparation and purifying attenuation."""

from .analytic import KeyRateResult, ProtocolParams, individual_rate
from .collective import collective_rate
from .gaussian import DegenerateMeasurementError, DomainError
from .optimize import ThresholdResult, dv_max, eps_max, maximize_rate_over_T
from .sweep import ConfigError, SweepSpec, figure_preset, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateMeasurementError",
    "DomainError",
    "KeyRateResult",
    "ProtocolParams",
    "SweepSpec",
    "ThresholdResult",
    "collective_rate",
    "dv_max",
    "eps_max",
    "figure_preset",
    "individual_rate",
    "maximize_rate_over_T",
    "run_sweep",
]
