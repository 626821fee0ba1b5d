"""Cascaded power-amplifier simulation, approximation, and optimization."""

from .cascade import (
    CascadeConfig,
    CascadeRun,
    EquivalentPa,
    ModelValidityWarning,
    PaStage,
    SaturationUndefinedError,
    approx_cascade_forward,
    cascade_forward,
    equivalent_pa,
    pa_nonlinearity,
    scenario2_gain,
    x_max,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    RunRecord,
    config_from_json,
    emit_outputs,
    run_optimizations,
    run_scenarios,
)
from .metrics import MetricsReport, PsdEstimate, aclr, amam_points, estimate_psd, nmse
from .optimizer import (
    Mode,
    OptimizationResult,
    OptimizationSpec,
    Scenario,
    SolveStatus,
    build_residual,
    grid_oracle,
    scenario_start,
    solve,
)
from .signals import (
    DegenerateSignalError,
    NoiseRealization,
    Signal,
    draw_noise,
    generate_qam16,
    normalize_power,
    pulse_shape,
    rrc_taps,
    unit_excitation,
)

__version__ = "0.1.0"

__all__ = [
    "CascadeConfig",
    "CascadeRun",
    "ConfigError",
    "DegenerateSignalError",
    "EquivalentPa",
    "ExperimentConfig",
    "MetricsReport",
    "Mode",
    "ModelValidityWarning",
    "NoiseRealization",
    "OptimizationResult",
    "OptimizationSpec",
    "PaStage",
    "PsdEstimate",
    "RunRecord",
    "SaturationUndefinedError",
    "Scenario",
    "Signal",
    "SolveStatus",
    "aclr",
    "amam_points",
    "approx_cascade_forward",
    "build_residual",
    "cascade_forward",
    "config_from_json",
    "draw_noise",
    "emit_outputs",
    "equivalent_pa",
    "estimate_psd",
    "generate_qam16",
    "grid_oracle",
    "nmse",
    "normalize_power",
    "pa_nonlinearity",
    "pulse_shape",
    "rrc_taps",
    "run_optimizations",
    "run_scenarios",
    "scenario2_gain",
    "scenario_start",
    "solve",
    "unit_excitation",
    "x_max",
    "__version__",
]
