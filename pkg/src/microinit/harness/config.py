"""Experiment configuration: dataclass plus a strict INI reader/writer.

File layout (every section optional, every key optional)::

    [experiment]
    system = lorenz            ; lorenz | mackey_glass
    operator = cube_sum        ; cube_sum | product | pairwise_sum
    T = 50
    m = 2
    ensemble_size = 100
    prediction_window = 600    ; blank means the per-system default
    seed = 0
    workers = 1
    output_dir = results       ; blank means $MICROINIT_OUTPUT_DIR or ./results
    stats_steps = 100000

    [system]                   ; model parameters, e.g. sigma/rho/beta/dt or a/b/c/t_d/n_x

    [noise]
    ratio = 0.3
    distribution = gaussian    ; gaussian | beta
    beta_a = 5
    beta_b = 2
    mirror = false

    [pipeline]                 ; PipelineConfig fields; blank means the per-system default
    alpha_R = 0.05
    beta_R = 0.5
    alpha_r = 1e-4
    beta_r_coeff = 0.8         ; beta_r = beta_r_coeff / r0**2
    q = 4
    r0 = 2.02
    optimizer = adam
    bound_budget = 200000
    refine_budget = 5000
    patience = 200
    guess_retries = 10

    [optimizer]                ; hyperparameters of the chosen optimizer, e.g. lr = 0.01

Unknown sections or keys raise :class:`ConfigError`.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..dynamics import LorenzModel, MackeyGlassModel, SystemModel
from ..observation import NoiseModel, Operator
from ..optim import OptimizerSpec
from ..pipeline import PipelineConfig

__all__ = [
    "ConfigError",
    "SYSTEMS",
    "OUTPUT_ENV",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "loads_config",
    "dumps_config",
    "config_hash",
]

OUTPUT_ENV = "MICROINIT_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


# per-system defaults: model class, threshold preset, series shape, prediction window, budgets
SYSTEMS = {
    "lorenz": dict(model=LorenzModel, preset=PipelineConfig.lorenz, T=50, m=2, window=600,
                   optimizer={"lr": 0.01}, pipeline={"refine_budget": 5000, "patience": 200}),
    "mackey_glass": dict(model=MackeyGlassModel, preset=PipelineConfig.mackey_glass, T=25, m=2,
                         window=900,
                         optimizer={"lr": 0.001},
                         pipeline={"refine_budget": 20000, "patience": 500}),
}

_PIPELINE_KEYS = ("alpha_R", "beta_R", "alpha_r", "beta_r_coeff", "q", "r0", "optimizer",
                  "bound_budget", "refine_budget", "patience", "guess_retries", "filter_noiseless")


def _default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "results")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun an ensemble bit-for-bit."""

    system: str = "lorenz"
    system_params: dict = field(default_factory=dict)
    operator: str = "cube_sum"
    T: int = 50
    m: int = 2
    noise_ratio: float = 0.3
    noise: NoiseModel = field(default_factory=NoiseModel)
    pipeline: dict = field(default_factory=dict)  # overrides of the per-system preset
    optimizer_params: dict = field(default_factory=dict)
    ensemble_size: int = 100
    prediction_window: int | None = None
    output_dir: str = field(default_factory=_default_output_dir)
    seed: int = 0
    workers: int = 1
    stats_steps: int = 100_000

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {sorted(SYSTEMS)}")
        try:
            Operator[self.operator.upper()]
        except KeyError:
            raise ConfigError(f"unknown operator {self.operator!r}") from None
        if self.T < 1 or self.m < 1:
            raise ConfigError("T and m must be >= 1")
        if self.noise_ratio < 0:
            raise ConfigError("noise ratio must be >= 0")
        if self.ensemble_size < 1 or self.workers < 1:
            raise ConfigError("ensemble_size and workers must be >= 1")
        if self.prediction_window is not None and self.prediction_window < 1:
            raise ConfigError("prediction_window must be >= 1")
        unknown = set(self.pipeline) - set(_PIPELINE_KEYS)
        if unknown:
            raise ConfigError(f"unknown pipeline key(s) {sorted(unknown)}")
        # surface model/pipeline errors at construction time
        try:
            self.build_model()
            self.pipeline_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    # derived objects
    @property
    def defaults(self) -> dict:
        return SYSTEMS[self.system]

    @property
    def op(self) -> Operator:
        return Operator[self.operator.upper()]

    @property
    def window(self) -> int:
        return self.prediction_window or self.defaults["window"]

    def build_model(self) -> SystemModel:
        return self.defaults["model"](**self.system_params)

    def pipeline_config(self, seed: int | None = None, **overrides) -> PipelineConfig:
        kw = dict(self.defaults["pipeline"])
        kw.update(self.pipeline)
        kw.update(overrides)
        variant = kw.pop("optimizer", "adam")
        if isinstance(variant, OptimizerSpec):
            spec = variant
        else:
            known = OptimizerSpec(variant).params
            # the per-system learning rate applies only to optimizers that have one
            params = {k: v for k, v in self.defaults["optimizer"].items() if k in known}
            params.update(self.optimizer_params)
            spec = OptimizerSpec(variant, params)
        kw["optimizer"] = spec
        if seed is not None:
            kw["seed"] = seed
        return self.defaults["preset"](**kw)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def default_config(system: str = "lorenz", **changes) -> ExperimentConfig:
    base = SYSTEMS.get(system)
    if base is None:
        raise ConfigError(f"unknown system {system!r}")
    kw = dict(system=system, T=base["T"], m=base["m"])
    kw.update(changes)
    return ExperimentConfig(**kw)


# INI serialization -----------------------------------------------------------

_EXPERIMENT_KEYS = {
    "system": str, "operator": str, "T": int, "m": int, "ensemble_size": int,
    "prediction_window": int, "seed": int, "workers": int, "output_dir": str, "stats_steps": int,
}
_NOISE_KEYS = {"ratio": float, "distribution": str, "beta_a": float, "beta_b": float, "mirror": bool}
_PIPELINE_TYPES = {
    "alpha_R": float, "beta_R": float, "alpha_r": float, "beta_r_coeff": float, "q": int,
    "r0": float, "optimizer": str, "bound_budget": int, "refine_budget": int, "patience": int,
    "guess_retries": int, "filter_noiseless": bool,
}


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=(";",))
    p.optionxform = str  # keep alpha_R vs alpha_r distinct
    return p


def _convert(section: str, key: str, raw: str, typ):
    if raw.strip() == "":
        return None
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "yes", "1", "on")
        if typ is int:
            return int(raw)
        return typ(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {typ.__name__}") from None


def _section(parser, name: str, schema: dict | None) -> dict:
    if not parser.has_section(name):
        return {}
    out = {}
    for key, raw in parser.items(name):
        if schema is None:
            out[key] = _convert(name, key, raw, float)
            continue
        if key not in schema:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        out[key] = _convert(name, key, raw, schema[key])
    return {k: v for k, v in out.items() if v is not None}


def loads_config(text: str) -> ExperimentConfig:
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    extra = set(parser.sections()) - {"experiment", "system", "noise", "pipeline", "optimizer"}
    if extra:
        raise ConfigError(f"unknown section(s) {sorted(extra)}")
    exp = _section(parser, "experiment", _EXPERIMENT_KEYS)
    noise = _section(parser, "noise", _NOISE_KEYS)
    system_params = _section(parser, "system", None)
    pipeline = _section(parser, "pipeline", _PIPELINE_TYPES)
    opt = _section(parser, "optimizer", None)
    if "n_x" in system_params:
        system_params["n_x"] = int(system_params["n_x"])

    system = exp.pop("system", "lorenz")
    if system not in SYSTEMS:
        raise ConfigError(f"unknown system {system!r}")
    kw = dict(T=SYSTEMS[system]["T"], m=SYSTEMS[system]["m"])
    kw.update(exp)
    try:
        noise_model = NoiseModel(kind=noise.get("distribution", "gaussian"),
                                 a=noise.get("beta_a", 5.0), b=noise.get("beta_b", 2.0),
                                 mirror=noise.get("mirror", False))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(system=system, system_params=system_params,
                            noise_ratio=noise.get("ratio", 0.3), noise=noise_model,
                            pipeline=pipeline, optimizer_params=opt, **kw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return loads_config(path.read_text())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def dumps_config(cfg: ExperimentConfig) -> str:
    parser = _parser()
    parser["experiment"] = {k: _fmt(getattr(cfg, k)) for k in _EXPERIMENT_KEYS}
    parser["system"] = {k: _fmt(v) for k, v in sorted(cfg.system_params.items())}
    parser["noise"] = {
        "ratio": _fmt(float(cfg.noise_ratio)), "distribution": cfg.noise.kind,
        "beta_a": _fmt(float(cfg.noise.a)), "beta_b": _fmt(float(cfg.noise.b)),
        "mirror": _fmt(cfg.noise.mirror),
    }
    parser["pipeline"] = {k: _fmt(v) for k, v in sorted(cfg.pipeline.items())}
    parser["optimizer"] = {k: _fmt(float(v)) for k, v in sorted(cfg.optimizer_params.items())}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_hash(cfg: ExperimentConfig) -> str:
    """Digest of everything that affects results; output location and worker count excluded."""
    neutral = cfg.replace(output_dir="", workers=1)
    return hashlib.sha256(dumps_config(neutral).encode()).hexdigest()
