"""Deterministic discrete-time maps for the Lorenz and Mackey-Glass systems.

Both models advance a microstate by one fixed internal step ``dt``.  The inner
loops are compiled with numba and operate on batches of states so that the
finite-difference gradient can push all perturbed states through the model in
one call.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numba as nb
import numpy as np

__all__ = [
    "TrajectoryOverflow",
    "SystemModel",
    "LorenzModel",
    "MackeyGlassModel",
    "step",
    "iterate",
    "trajectory",
    "sample_attractor",
]


class TrajectoryOverflow(FloatingPointError):
    """A trajectory produced a non-finite state."""

    def __init__(self, step_index: int, member: int = 0):
        self.step_index = int(step_index)
        self.member = int(member)
        super().__init__(
            f"trajectory diverged (non-finite state) at step {self.step_index}"
            + (f" of batch member {self.member}" if self.member else "")
        )


@nb.njit(cache=True)
def _lorenz_batch(x0, count, stride, sigma, rho, beta, dt, out, fail):
    h = 0.5 * dt
    for b in range(x0.shape[0]):
        x, y, z = x0[b, 0], x0[b, 1], x0[b, 2]
        out[b, 0, 0] = x
        out[b, 0, 1] = y
        out[b, 0, 2] = z
        n = 0
        for j in range(1, count):
            for _ in range(stride):
                k1x = sigma * (y - x)
                k1y = x * (rho - z) - y
                k1z = x * y - beta * z
                x2 = x + h * k1x
                y2 = y + h * k1y
                z2 = z + h * k1z
                k2x = sigma * (y2 - x2)
                k2y = x2 * (rho - z2) - y2
                k2z = x2 * y2 - beta * z2
                x3 = x + h * k2x
                y3 = y + h * k2y
                z3 = z + h * k2z
                k3x = sigma * (y3 - x3)
                k3y = x3 * (rho - z3) - y3
                k3z = x3 * y3 - beta * z3
                x4 = x + dt * k3x
                y4 = y + dt * k3y
                z4 = z + dt * k3z
                k4x = sigma * (y4 - x4)
                k4y = x4 * (rho - z4) - y4
                k4z = x4 * y4 - beta * z4
                x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                y = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
                z = z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
                n += 1
                if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
                    if fail[b] < 0:
                        fail[b] = n
                    x = y = z = 0.0
            out[b, j, 0] = x
            out[b, j, 1] = y
            out[b, j, 2] = z


@nb.njit(cache=True)
def _mackey_glass_batch(x0, count, stride, a, b_, c, dt, out, fail):
    # The window slides by one sample per step, so a trajectory is a delay line.
    nx = x0.shape[1]
    n_steps = (count - 1) * stride
    buf = np.empty(nx + n_steps)
    for b in range(x0.shape[0]):
        for i in range(nx):
            buf[i] = x0[b, i]
        for j in range(n_steps):
            cur = buf[nx - 1 + j]
            lag = buf[j]
            new = cur + dt * (a * lag / (1.0 + lag**c) - b_ * cur)
            if not np.isfinite(new):
                if fail[b] < 0:
                    fail[b] = j + 1
                new = 0.0
            buf[nx + j] = new
        for k in range(count):
            s = k * stride
            for i in range(nx):
                out[b, k, i] = buf[s + i]


class SystemModel(ABC):
    """A deterministic map ``x -> f(x)`` advancing the state by ``dt``."""

    dt: float

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def _kernel(self, states: np.ndarray, count: int, stride: int,
                out: np.ndarray, fail: np.ndarray) -> None: ...

    @abstractmethod
    def sample_box(self, rng: np.random.Generator) -> np.ndarray:
        """Draw a state uniformly from the configured basin box."""

    def run(self, states, count: int, stride: int = 1) -> np.ndarray:
        """Batch trajectories, shape ``(B, count, dim)``; row ``j`` is ``f^{j*stride}``.

        Raises :class:`TrajectoryOverflow` if any member leaves the floats.
        """
        if count < 1 or stride < 1:
            raise ValueError("count and stride must be >= 1")
        states = np.ascontiguousarray(states, dtype=float)
        if states.ndim == 1:
            states = states[None, :]
        if states.shape[1] != self.dim:
            raise ValueError(f"expected states of dimension {self.dim}, got {states.shape[1]}")
        if not np.all(np.isfinite(states)):
            raise ValueError("initial state contains non-finite values")
        out = np.empty((states.shape[0], count, self.dim))
        fail = np.full(states.shape[0], -1, dtype=np.int64)
        self._kernel(states, count, stride, out, fail)
        if np.any(fail >= 0):
            bad = np.flatnonzero(fail >= 0)
            first = bad[np.argmin(fail[bad])]
            raise TrajectoryOverflow(fail[first], first)
        return out


@dataclass(frozen=True)
class LorenzModel(SystemModel):
    """Lorenz-63 integrated with classical fixed-step RK4."""

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.01
    box: tuple = ((-20.0, 20.0), (-25.0, 25.0), (0.0, 45.0))

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def dim(self) -> int:
        return 3

    def _kernel(self, states, count, stride, out, fail):
        _lorenz_batch(states, count, stride, float(self.sigma), float(self.rho),
                      float(self.beta), float(self.dt), out, fail)

    def sample_box(self, rng):
        lo, hi = np.array(self.box, dtype=float).T
        return rng.uniform(lo, hi)


@dataclass(frozen=True)
class MackeyGlassModel(SystemModel):
    """Mackey-Glass delay equation as an ``n_x``-sample delay line with Euler steps.

    Component 0 holds the oldest sample and component ``n_x - 1`` the newest.
    One step appends ``x_new = x[-1] + dt*F(x[-1], x[0])`` and drops ``x[0]``;
    ``n_x`` consecutive steps reproduce the full sequential window update.
    """

    a: float = 0.2
    b: float = 0.1
    c: float = 10.0
    t_d: float = 25.0
    n_x: int = 50
    box: tuple = (0.4, 1.4)

    def __post_init__(self):
        if not self.t_d > 0:
            raise ValueError("t_d must be positive")
        if int(self.n_x) != self.n_x or self.n_x < 1:
            raise ValueError("n_x must be a positive integer")

    @property
    def dt(self) -> float:
        return self.t_d / self.n_x

    @property
    def dim(self) -> int:
        return int(self.n_x)

    def rate(self, current, lagged):
        """Right-hand side ``a*x_d/(1+x_d^c) - b*x``."""
        return self.a * lagged / (1.0 + lagged**self.c) - self.b * current

    def _kernel(self, states, count, stride, out, fail):
        _mackey_glass_batch(states, count, stride, float(self.a), float(self.b),
                            float(self.c), float(self.dt), out, fail)

    def sample_box(self, rng):
        lo, hi = self.box
        return rng.uniform(lo, hi, size=self.dim)


def step(model: SystemModel, x) -> np.ndarray:
    return model.run(x, 2, 1)[0, 1]


def iterate(model: SystemModel, x, n: int) -> np.ndarray:
    """Apply the map ``n`` times; ``n == 0`` returns a copy of ``x``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = np.asarray(x, dtype=float)
    if n == 0:
        return x.copy()
    return model.run(x, 2, int(n))[0, 1]


def trajectory(model: SystemModel, x, count: int, stride: int = 1) -> np.ndarray:
    """States ``x, f^stride(x), ..., f^{(count-1)*stride}(x)`` as a ``(count, dim)`` array."""
    return model.run(x, count, stride)[0]


def sample_attractor(model: SystemModel, rng: np.random.Generator, burn_in: int = 5000,
                     max_tries: int = 20) -> np.ndarray:
    """Random box draw relaxed onto the attractor by ``burn_in`` steps."""
    if burn_in < 1:
        raise ValueError("burn_in must be >= 1")
    for _ in range(max_tries):
        x = model.sample_box(rng)
        try:
            return iterate(model, x, burn_in)
        except TrajectoryOverflow:
            continue
    raise RuntimeError(f"no bounded trajectory found in {max_tries} draws")
