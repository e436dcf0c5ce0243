"""Experiment harness: configuration, seeded ensembles, recipes and the CLI."""
from .config import ConfigError, ExperimentConfig, default_config, dumps_config, load_config, loads_config
from .ensemble import EnsembleResult, RunRecord, run_ensemble, run_one

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "dumps_config",
    "load_config",
    "loads_config",
    "EnsembleResult",
    "RunRecord",
    "run_ensemble",
    "run_one",
]
