"""Least-squares misfit between observed and model-predicted series."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import SystemModel, TrajectoryOverflow
from .observation import ObservationSeries

__all__ = [
    "FD_STEP",
    "CostEvaluationError",
    "CostEvaluation",
    "Objective",
    "predict_observations",
    "cost",
    "cost_gradient",
    "expected_cost_floor",
]

FD_STEP = float(np.sqrt(np.finfo(float).eps))  # ~1.49e-8


class CostEvaluationError(ArithmeticError):
    """The model trajectory needed for a cost value diverged."""


@dataclass(frozen=True, eq=False)
class CostEvaluation:
    value: float
    residuals: np.ndarray


def predict_observations(model: SystemModel, op, x, T: int, m: int) -> np.ndarray:
    """Predicted series ``H(f^{m(k+T)}(x))``, ``k = -T..0``."""
    if T < 1 or m < 1:
        raise ValueError("T and m must be >= 1")
    return op(model.run(x, T + 1, m)[0])


def _normalizer(series: ObservationSeries) -> float:
    # Divide by the number of summed terms so a constant mean predictor scores exactly 1.
    return series.values.size * series.sigma_y**2


class Objective:
    """Cost ``J(x)`` of a fixed series under a fixed model and operator.

    Evaluations are batched: ``values(states)`` pushes a stack of candidate
    states through the model in one kernel call.
    """

    def __init__(self, model: SystemModel, op, series: ObservationSeries,
                 predictor: Callable | None = None):
        self.model = model
        self.op = op
        self.series = series
        self.predictor = predictor
        self._norm = _normalizer(series)

    def predictions(self, states) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if self.predictor is not None:
            return np.stack([np.asarray(self.predictor(s), dtype=float) for s in states])
        try:
            traj = self.model.run(states, self.series.T + 1, self.series.m)
        except TrajectoryOverflow as exc:
            raise CostEvaluationError(str(exc)) from exc
        return self.op(traj)

    def values(self, states) -> np.ndarray:
        resid = self.series.values - self.predictions(states)
        return np.sum(resid**2, axis=-1) / self._norm

    def evaluate(self, x) -> CostEvaluation:
        resid = self.series.values - self.predictions(x)[0]
        return CostEvaluation(float(np.sum(resid**2) / self._norm), resid)

    def __call__(self, x) -> float:
        return float(self.values(x)[0])

    def gradient(self, x, rel_step: float = FD_STEP) -> np.ndarray:
        """Centered finite differences with step ``rel_step * max(1, |x_i|)``."""
        x = np.asarray(x, dtype=float)
        n = x.size
        h = rel_step * np.maximum(1.0, np.abs(x))
        pts = np.repeat(x[None, :], 2 * n, axis=0)
        idx = np.arange(n)
        pts[idx, idx] += h
        pts[n + idx, idx] -= h
        vals = self.values(pts)
        step = pts[idx, idx] - pts[n + idx, idx]
        return (vals[:n] - vals[n:]) / step


def cost(model: SystemModel, op, series: ObservationSeries, x,
         predictor: Callable | None = None) -> CostEvaluation:
    """Normalized squared misfit; ``predictor`` overrides the model-based prediction."""
    return Objective(model, op, series, predictor).evaluate(x)


def cost_gradient(model: SystemModel, op, series: ObservationSeries, x,
                  rel_step: float = FD_STEP) -> np.ndarray:
    return Objective(model, op, series).gradient(x, rel_step)


def expected_cost_floor(series: ObservationSeries, r0: float) -> float:
    """Lowest cost expected after filtering: ``(sigma_n/sigma_y)^2 / r0^2``."""
    if r0 < 1:
        raise ValueError("r0 must be >= 1")
    return series.noise_ratio**2 / r0**2
