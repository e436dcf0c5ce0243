"""Microstate initialization of chaotic models from short scalar time series.

The workflow is: simulate a model, observe it through a scalar operator,
optionally smooth the observations, then recover the present-time microstate
with a bound-then-refine search over the least-squares misfit.
"""
from .dynamics import (
    LorenzModel,
    MackeyGlassModel,
    SystemModel,
    TrajectoryOverflow,
    iterate,
    sample_attractor,
    step,
    trajectory,
)
from .filtering import lpma, lpma_once, snr_gain
from .objective import Objective, cost, cost_gradient
from .observation import NoiseModel, ObservationSeries, Operator, add_noise, generate_series, observe
from .optim import OptimizerSpec, StopRule, minimize
from .pipeline import InitializationResult, PipelineConfig, initialize
from .validation import (
    ModelSpaceStats,
    estimate_model_stats,
    lyapunov_exponent,
    nse_mod,
    nse_obs,
    power_spectrum,
    predictability_horizon,
    ten_fold_time,
)

__version__ = "0.1.0"

__all__ = [
    "LorenzModel",
    "MackeyGlassModel",
    "SystemModel",
    "TrajectoryOverflow",
    "iterate",
    "sample_attractor",
    "step",
    "trajectory",
    "lpma",
    "lpma_once",
    "snr_gain",
    "Objective",
    "cost",
    "cost_gradient",
    "NoiseModel",
    "ObservationSeries",
    "Operator",
    "add_noise",
    "generate_series",
    "observe",
    "OptimizerSpec",
    "StopRule",
    "minimize",
    "InitializationResult",
    "PipelineConfig",
    "initialize",
    "ModelSpaceStats",
    "estimate_model_stats",
    "lyapunov_exponent",
    "nse_mod",
    "nse_obs",
    "power_spectrum",
    "predictability_horizon",
    "ten_fold_time",
]
