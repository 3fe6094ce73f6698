"""Joint BS / active-RIS beamforming with a practical reflection-amplifier model."""

from .amplifier import AmplifierModel, amplification_factor, reflection_gain_db, region
from .channel import ChannelSet, Geometry, PathLossParams, generate_channels
from .harness import ExperimentConfig, SweepResult, run_sweep, write_results
from .solver import (
    IDEAL,
    MODES,
    PASSIVE,
    PRACTICAL,
    BCDResult,
    SolverOptions,
    run_bcd,
    run_ideal_mode,
    run_passive_mode,
    run_practical_mode,
)
from .system import SystemConfig, check_constraints, sinr, sum_rate

__all__ = [
    "AmplifierModel",
    "BCDResult",
    "ChannelSet",
    "ExperimentConfig",
    "Geometry",
    "IDEAL",
    "MODES",
    "PASSIVE",
    "PRACTICAL",
    "PathLossParams",
    "SolverOptions",
    "SweepResult",
    "SystemConfig",
    "amplification_factor",
    "check_constraints",
    "generate_channels",
    "reflection_gain_db",
    "region",
    "run_bcd",
    "run_ideal_mode",
    "run_passive_mode",
    "run_practical_mode",
    "run_sweep",
    "sinr",
    "sum_rate",
    "write_results",
]
