"""First-order optimizers driven by plain objective and gradient callables.

Every variant is a small class holding its own moment buffers; :func:`minimize`
runs one of them under a :class:`StopRule` and keeps the best iterate seen.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "VARIANTS",
    "OptimizerSpec",
    "StopRule",
    "OptRun",
    "default_hyperparameters",
    "make_optimizer",
    "minimize",
]


class _Optimizer:
    def __init__(self, **hp):
        self.hp = hp
        self.t = 0

    def step(self, x, grad_fn):
        self.t += 1
        return x - self._delta(x, grad_fn)

    def _delta(self, x, grad_fn):
        raise NotImplementedError


class SGD(_Optimizer):
    # full deterministic gradient; there is no minibatch structure to sample from
    def _delta(self, x, grad_fn):
        return self.hp["lr"] * grad_fn(x)


class Momentum(_Optimizer):
    v = 0.0

    def _delta(self, x, grad_fn):
        self.v = self.hp["gamma"] * self.v + self.hp["lr"] * grad_fn(x)
        return self.v


class Nesterov(_Optimizer):
    v = 0.0

    def _delta(self, x, grad_fn):
        g = grad_fn(x - self.hp["gamma"] * self.v)
        self.v = self.hp["gamma"] * self.v + self.hp["lr"] * g
        return self.v


class Adagrad(_Optimizer):
    G = 0.0

    def _delta(self, x, grad_fn):
        g = grad_fn(x)
        self.G = self.G + g * g
        return self.hp["lr"] * g / np.sqrt(self.G + self.hp["eps"])


class Adadelta(_Optimizer):
    eg2 = 0.0
    edx2 = 0.0

    def _delta(self, x, grad_fn):
        rho, eps = self.hp["rho"], self.hp["eps"]
        g = grad_fn(x)
        self.eg2 = rho * self.eg2 + (1 - rho) * g * g
        d = np.sqrt(self.edx2 + eps) / np.sqrt(self.eg2 + eps) * g
        self.edx2 = rho * self.edx2 + (1 - rho) * d * d
        return d


class RMSprop(_Optimizer):
    eg2 = 0.0

    def _delta(self, x, grad_fn):
        rho = self.hp["rho"]
        g = grad_fn(x)
        self.eg2 = rho * self.eg2 + (1 - rho) * g * g
        return self.hp["lr"] * g / np.sqrt(self.eg2 + self.hp["eps"])


class Adam(_Optimizer):
    m = 0.0
    v = 0.0

    def _delta(self, x, grad_fn):
        b1, b2 = self.hp["beta1"], self.hp["beta2"]
        g = grad_fn(x)
        self.m = b1 * self.m + (1 - b1) * g
        self.v = b2 * self.v + (1 - b2) * g * g
        m_hat = self.m / (1 - b1**self.t)
        v_hat = self._second_moment() / (1 - b2**self.t)
        return self.hp["lr"] * m_hat / (np.sqrt(v_hat) + self.hp["eps"])

    def _second_moment(self):
        return self.v


class AMSGrad(Adam):
    """Adam normalized by the running maximum of the second moment ("AdamX")."""

    v_max = 0.0

    def _second_moment(self):
        self.v_max = np.maximum(self.v_max, self.v)
        return self.v_max


class YamAdam(_Optimizer):
    """Hyperparameter-free Adam/Adadelta hybrid with an adaptive decay rate.

    The decay rate ``beta`` is a sigmoid of the ratio between consecutive step
    sizes, and steps carry units of ``x`` through the Adadelta-style ratio.
    """

    m = 0.0
    v = 0.0
    s = 0.0
    last = 0.0
    beta = 0.5

    def _delta(self, x, grad_fn):
        eps = self.hp["eps"]
        b = self.beta
        g = grad_fn(x)
        m_prev = self.m
        self.m = b * self.m + (1 - b) * g
        self.v = b * self.v + (1 - b) * (g - m_prev) ** 2
        d = np.sqrt(self.s + eps) / np.sqrt(self.v + eps) * self.m
        self.s = b * self.s + (1 - b) * d * d
        ratio = np.abs(d) / (np.abs(self.last) + eps)
        self.beta = np.minimum(1.0 / (1.0 + np.exp(-ratio)), 1.0 - eps)
        self.last = d
        return d


_CLASSES = {
    "sgd": SGD,
    "momentum": Momentum,
    "nesterov": Nesterov,
    "adagrad": Adagrad,
    "adadelta": Adadelta,
    "rmsprop": RMSprop,
    "adam": Adam,
    "amsgrad": AMSGrad,
    "yamadam": YamAdam,
}
VARIANTS = tuple(_CLASSES)
_ALIASES = {"adamx": "amsgrad", "gd": "sgd"}

_DEFAULTS = {
    "sgd": {"lr": 0.01},
    "momentum": {"lr": 0.01, "gamma": 0.9},
    "nesterov": {"lr": 0.01, "gamma": 0.9},
    "adagrad": {"lr": 0.01, "eps": 1e-8},
    "adadelta": {"rho": 0.95, "eps": 1e-6},
    "rmsprop": {"lr": 0.001, "rho": 0.9, "eps": 1e-8},
    "adam": {"lr": 0.001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "amsgrad": {"lr": 0.001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "yamadam": {"eps": 1e-8},
}


def _canonical(variant: str) -> str:
    name = variant.lower().replace("-", "").replace("_", "")
    name = _ALIASES.get(name, name)
    if name not in _CLASSES:
        raise ValueError(f"unknown optimizer {variant!r}; choose from {', '.join(VARIANTS)}")
    return name


@dataclass(frozen=True)
class OptimizerSpec:
    variant: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        name = _canonical(self.variant)
        params = dict(_DEFAULTS[name])
        unknown = set(self.params) - set(params)
        if unknown:
            raise ValueError(f"{name} has no hyperparameter(s) {sorted(unknown)}")
        params.update({k: float(v) for k, v in self.params.items()})
        if params.get("lr", 1.0) <= 0:
            raise ValueError("learning rate must be positive")
        for key in ("gamma", "rho", "beta1", "beta2"):
            if key in params and not 0 <= params[key] < 1:
                raise ValueError(f"{key} must lie in [0, 1)")
        if params.get("eps", 1.0) <= 0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "variant", name)
        object.__setattr__(self, "params", MappingProxyType(params))

    def as_dict(self) -> dict:
        return {"variant": self.variant, **self.params}


def default_hyperparameters(variant: str) -> OptimizerSpec:
    return OptimizerSpec(variant)


def make_optimizer(spec: OptimizerSpec) -> _Optimizer:
    return _CLASSES[spec.variant](**spec.params)


@dataclass(frozen=True)
class StopRule:
    threshold: float = 0.0
    max_iters: int = 1000
    patience: int = 200
    rel_tol: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(eq=False)
class OptRun:
    best_point: np.ndarray
    best_value: float
    trace: np.ndarray  # (iteration, value) rows
    converged: bool
    iterations_used: int
    failed: bool = False
    message: str = ""


def minimize(objective: Callable, gradient: Callable, x0, spec: OptimizerSpec | str,
             stop: StopRule = StopRule()) -> OptRun:
    """Run ``spec`` from ``x0`` until the objective drops to ``stop.threshold``.

    Stops early when the best value has not improved by ``stop.rel_tol``
    (relative) for ``stop.patience`` iterations.  An evaluation error aborts
    the run and returns what was found so far with ``failed=True``.
    """
    if isinstance(spec, str):
        spec = OptimizerSpec(spec)
    opt = make_optimizer(spec)
    x = np.array(x0, dtype=float)
    try:
        fx = float(objective(x))
    except ArithmeticError as exc:
        return OptRun(x, np.inf, np.empty((0, 2)), False, 0, True, str(exc))

    best_x, best = x.copy(), fx
    trace = [(0, fx)]
    ref, ref_it = best, 0
    failed, message = False, ""
    it = 0
    while it < stop.max_iters and not best <= stop.threshold:
        it += 1
        try:
            x = opt.step(x, gradient)
            if not np.all(np.isfinite(x)):
                raise FloatingPointError("optimizer produced a non-finite iterate")
            fx = float(objective(x))
        except ArithmeticError as exc:
            failed, message = True, f"iteration {it}: {exc}"
            it -= 1
            break
        trace.append((it, fx))
        if fx < best:
            best, best_x = fx, x.copy()
        if best < ref * (1 - stop.rel_tol):
            ref, ref_it = best, it
        elif it - ref_it >= stop.patience:
            message = "plateau"
            break
    return OptRun(best_x, best, np.array(trace, dtype=float), bool(best <= stop.threshold),
                  it, failed, message)
