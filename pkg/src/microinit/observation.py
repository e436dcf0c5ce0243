"""Scalar aggregating observation operators and synthetic observation series."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .dynamics import SystemModel

__all__ = [
    "Operator",
    "observe",
    "ObservationSeries",
    "NoiseModel",
    "generate_series",
    "add_noise",
]


def _cube_sum(x):
    return np.cbrt(np.sum(x**3, axis=-1))


def _product(x):
    p = np.prod(x, axis=-1)
    return np.sign(p) * np.abs(p) ** (1.0 / x.shape[-1])


def _pairwise_sum(x):
    # sum_{i<j} x_i x_j = ((sum x)^2 - sum x^2) / 2
    s = np.sum(x, axis=-1)
    c = 0.5 * (s * s - np.sum(x * x, axis=-1))
    return np.sign(c) * np.sqrt(np.abs(c))


class Operator(Enum):
    """Observation operators mapping a microstate (last axis) to a scalar.

    All three are positively homogeneous of degree one, so level sets are
    reached by rescaling any direction with a matching sign.
    """

    CUBE_SUM = "cube_sum"
    PRODUCT = "product"
    PAIRWISE_SUM = "pairwise_sum"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _IMPLS[self](x)


_IMPLS = {
    Operator.CUBE_SUM: _cube_sum,
    Operator.PRODUCT: _product,
    Operator.PAIRWISE_SUM: _pairwise_sum,
}


def observe(op, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot observe a non-finite state")
    return op(x)


@dataclass(frozen=True, eq=False)
class ObservationSeries:
    """Samples ``y_{-T}, ..., y_0`` taken every ``m`` model steps.

    ``sigma_y`` is the normalization scale used by the cost; it defaults to the
    population standard deviation of ``values``.  ``clean`` optionally keeps the
    noiseless values of a synthetic series.
    """

    values: np.ndarray
    m: int
    dt: float
    sigma_y: float | None = None
    noise_ratio: float = 0.0
    clean: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("an observation series needs at least two samples")
        if not np.all(np.isfinite(values)):
            raise ValueError("observation values must be finite")
        if self.m < 1:
            raise ValueError("sampling interval m must be >= 1")
        if self.sigma_y is None:
            object.__setattr__(self, "sigma_y", float(np.std(values)))
        if not self.sigma_y > 0:
            raise ValueError("observation series is constant (sigma_y = 0)")
        if self.noise_ratio < 0:
            raise ValueError("noise_ratio must be non-negative")
        if self.clean is not None:
            clean = np.array(self.clean, dtype=float)
            clean.setflags(write=False)
            object.__setattr__(self, "clean", clean)

    @property
    def T(self) -> int:
        return self.values.size - 1

    @property
    def times(self) -> np.ndarray:
        """Observation times ``t_k = k*m*dt`` for ``k = -T..0``."""
        return np.arange(-self.T, 1) * self.m * self.dt

    def with_values(self, values, **changes) -> "ObservationSeries":
        return replace(self, values=values, **changes)


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean, unit-variance noise shape.

    ``kind="beta"`` draws a standardized ``Beta(a, b)``.  ``Beta(5, 2)`` is
    already left-skewed; ``mirror=True`` reflects the draw about its mean.
    """

    kind: str = "gaussian"
    a: float = 5.0
    b: float = 2.0
    mirror: bool = False

    def __post_init__(self):
        if self.kind not in ("gaussian", "beta"):
            raise ValueError(f"unknown noise distribution {self.kind!r}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(n)
        a, b = self.a, self.b
        mean = a / (a + b)
        std = np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
        e = (rng.beta(a, b, n) - mean) / std
        return -e if self.mirror else e


def generate_series(model: SystemModel, op, x_start, T: int, m: int) -> ObservationSeries:
    """Noiseless series ``H(f^{m(k+T)}(x_start))`` for ``k = -T..0``."""
    if T < 1 or m < 1:
        raise ValueError("T and m must be >= 1")
    states = model.run(x_start, T + 1, m)[0]
    values = op(states)
    return ObservationSeries(values, m=m, dt=model.dt, clean=values)


def add_noise(series: ObservationSeries, ratio: float, rng: np.random.Generator,
              dist: NoiseModel = NoiseModel()) -> ObservationSeries:
    """Add i.i.d. noise with standard deviation ``ratio * sigma_y``.

    ``sigma_y`` stays at the value of the input (clean) series.
    """
    if ratio < 0:
        raise ValueError("noise ratio must be non-negative")
    clean = series.clean if series.clean is not None else series.values
    if ratio == 0:
        return replace(series, noise_ratio=0.0, clean=clean)
    eps = ratio * series.sigma_y * dist.sample(rng, series.values.size)
    return replace(series, values=series.values + eps, noise_ratio=float(ratio), clean=clean)
