"""Preprocess, bound and refine: the microstate initialization procedure."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dynamics import SystemModel, TrajectoryOverflow, iterate
from .filtering import lpma
from .objective import Objective
from .observation import ObservationSeries
from .optim import OptimizerSpec, OptRun, StopRule, minimize

__all__ = [
    "PipelineConfig",
    "InitializationResult",
    "GuessError",
    "initial_guess",
    "bound",
    "refine",
    "initialize",
    "noise_term",
]

# stage tags for seed derivation
_GUESS = 1


class GuessError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    """Thresholds and budgets of the three stages.

    ``beta_r`` is absolute, i.e. already multiplied by ``r0**-2``; use
    :meth:`with_r0` to build it from a coefficient.  ``noise_ratio=None``
    takes sigma_n/sigma_y from the series metadata.  The ``q`` smoothing passes
    are skipped for series with zero noise unless ``filter_noiseless`` is set.
    """

    alpha_R: float = 0.05
    beta_R: float = 0.5
    alpha_r: float = 1e-4
    beta_r: float = 0.8 / 2.02**2
    q: int = 4
    r0: float = 2.02
    optimizer: OptimizerSpec = field(default_factory=lambda: OptimizerSpec("adam"))
    bound_budget: int = 200_000
    refine_budget: int = 2000
    patience: int = 200
    guess_retries: int = 10
    noise_ratio: float | None = None
    basin_boxes: tuple | None = None
    filter_noiseless: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha_R", "beta_R", "alpha_r", "beta_r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.alpha_r < self.alpha_R:
            raise ValueError("alpha_r must be smaller than alpha_R")
        if not self.beta_r <= self.beta_R:
            raise ValueError("beta_r must not exceed beta_R")
        if self.q < 0 or self.bound_budget < 0 or self.refine_budget < 1:
            raise ValueError("q, bound_budget must be >= 0 and refine_budget >= 1")
        if self.r0 < 1:
            raise ValueError("r0 must be >= 1")
        if isinstance(self.optimizer, str):
            object.__setattr__(self, "optimizer", OptimizerSpec(self.optimizer))

    @classmethod
    def with_r0(cls, r0: float, beta_r_coeff: float, **kwargs) -> "PipelineConfig":
        return cls(r0=r0, beta_r=beta_r_coeff / r0**2, **kwargs)

    @classmethod
    def lorenz(cls, **kwargs) -> "PipelineConfig":
        base = dict(alpha_R=0.05, beta_R=0.5, alpha_r=1e-4, q=4)
        base.update(kwargs)
        return cls.with_r0(base.pop("r0", 2.02), base.pop("beta_r_coeff", 0.8), **base)

    @classmethod
    def mackey_glass(cls, **kwargs) -> "PipelineConfig":
        base = dict(alpha_R=0.05, beta_R=0.5, alpha_r=1e-5, q=5)
        base.update(kwargs)
        return cls.with_r0(base.pop("r0", 2.41), base.pop("beta_r_coeff", 0.2), **base)

    def delta_R(self, noise_ratio: float) -> float:
        return self.alpha_R + noise_ratio**2 * self.beta_R

    def delta_r(self, noise_ratio: float) -> float:
        return self.alpha_r + noise_ratio**2 * self.beta_r


@dataclass(eq=False)
class InitializationResult:
    assimilated: np.ndarray
    initialized: np.ndarray
    cost_assimilated: float
    bound_steps_used: int
    refine_trace: OptRun
    r0_used: float
    bounded: bool
    refined: bool
    rough: np.ndarray
    cost_rough: float
    message: str = ""

    @property
    def flags(self) -> dict:
        return {"bounded": self.bounded, "refined": self.refined}


def noise_term(series: ObservationSeries, config: PipelineConfig) -> float:
    return series.noise_ratio if config.noise_ratio is None else config.noise_ratio


def _draw_direction(model: SystemModel, rng, box):
    if box is None:
        return model.sample_box(rng)
    lo, hi = np.broadcast_to(np.asarray(box, dtype=float).T, (2, model.dim))
    return rng.uniform(lo, hi)


def initial_guess(op, series: ObservationSeries, rng: np.random.Generator,
                  model: SystemModel, box=None, retries: int = 10) -> np.ndarray:
    """Random point on the level set ``{x : H(x) = y_{-T}}``.

    A direction drawn from the basin box is rescaled by ``y/H(d)``; the
    operator must be positively homogeneous of degree one, which is checked
    numerically on the drawn direction.
    """
    y0 = float(series.values[0])
    tol = 1e-10 * max(1.0, abs(y0))
    for _ in range(max(1, retries)):
        d = _draw_direction(model, rng, box)
        h = float(op(d))
        if h == 0 or not np.isfinite(h):
            continue
        if not np.isclose(float(op(2.0 * d)), 2.0 * h, rtol=1e-9, atol=0):
            raise GuessError("observation operator is not homogeneous of degree one")
        lam = y0 / h
        if lam < 0:
            # odd operators flip sign with the direction; even ones cannot reach y0 this way
            if np.isclose(float(op(-d)), -h, rtol=1e-12, atol=0):
                d, lam = -d, -lam
            else:
                continue
        guess = lam * d
        if abs(float(op(guess)) - y0) <= tol:
            return guess
    raise GuessError(f"no level-set point found for y_(-T)={y0} in {retries} draws")


def bound(model: SystemModel, op, filtered: ObservationSeries, guess,
          config: PipelineConfig, noise_ratio: float | None = None,
          chunk: int = 2048) -> tuple[np.ndarray, int, bool]:
    """Evolve ``guess`` in steps of ``m`` until its cost drops to ``delta_R``.

    Returns ``(x_R, steps_used, bounded)``.  Candidates are scored in chunks
    from a single long trajectory, which is bit-identical to iterating the
    guess ``m*R`` times.  When the budget runs out the lowest-cost candidate
    seen is returned with ``bounded=False``.
    """
    if noise_ratio is None:
        noise_ratio = noise_term(filtered, config)
    delta = config.delta_R(noise_ratio)
    T, m = filtered.T, filtered.m
    z = filtered.values
    norm = z.size * filtered.sigma_y**2
    max_R = config.bound_budget // m
    x = np.asarray(guess, dtype=float).copy()
    best_val, best_x, best_R = np.inf, x.copy(), 0
    R0 = 0
    while R0 <= max_R:
        n_cand = min(chunk, max_R - R0 + 1)
        states = model.run(x, n_cand + T, m)[0]
        h = op(states)
        costs = np.sum((sliding_window_view(h, T + 1) - z) ** 2, axis=1) / norm
        hit = np.flatnonzero(costs <= delta)
        if hit.size:
            R = int(hit[0])
            return states[R].copy(), m * (R0 + R), True
        i = int(np.argmin(costs))
        if costs[i] < best_val:
            best_val, best_x, best_R = costs[i], states[i].copy(), R0 + i
        if n_cand < chunk:
            break
        x = states[n_cand]
        R0 += n_cand
    return best_x, m * best_R, False


def refine(model: SystemModel, op, filtered: ObservationSeries, x_R,
           config: PipelineConfig, noise_ratio: float | None = None) -> OptRun:
    """Minimize the cost from ``x_R`` until it drops to ``delta_r``."""
    if noise_ratio is None:
        noise_ratio = noise_term(filtered, config)
    objective = Objective(model, op, filtered)
    stop = StopRule(threshold=config.delta_r(noise_ratio), max_iters=config.refine_budget,
                    patience=config.patience)
    return minimize(objective, objective.gradient, x_R, config.optimizer, stop)


def _single_basin(model, op, filtered, config, rng, box, noise_ratio):
    last_exc = None
    for _ in range(max(1, config.guess_retries)):
        guess = initial_guess(op, filtered, rng, model, box, config.guess_retries)
        try:
            x_R, used, ok = bound(model, op, filtered, guess, config, noise_ratio)
            break
        except TrajectoryOverflow as exc:
            last_exc = exc
    else:
        raise GuessError(f"every guess diverged during bounding: {last_exc}")
    run = refine(model, op, filtered, x_R, config, noise_ratio)
    return x_R, used, ok, run


def initialize(model: SystemModel, op, raw: ObservationSeries,
               config: PipelineConfig) -> InitializationResult:
    """Full procedure: filter ``q`` times, guess, bound, refine, propagate to ``t_0``."""
    noise_ratio = noise_term(raw, config)
    q = config.q if (noise_ratio > 0 or config.filter_noiseless) else 0
    filtered = lpma(raw, q)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _GUESS]))
    boxes = config.basin_boxes or (None,)
    best = None
    for box in boxes:
        x_R, used, ok, run = _single_basin(model, op, filtered, config, rng, box, noise_ratio)
        if best is None or run.best_value < best[3].best_value:
            best = (x_R, used, ok, run)
    x_R, used, ok, run = best
    rough_cost = Objective(model, op, filtered)(x_R)
    assimilated = run.best_point
    return InitializationResult(
        assimilated=assimilated,
        initialized=iterate(model, assimilated, raw.m * raw.T),
        cost_assimilated=float(run.best_value),
        bound_steps_used=used,
        refine_trace=run,
        r0_used=config.r0,
        bounded=ok,
        refined=run.converged,
        rough=x_R,
        cost_rough=rough_cost,
        message=run.message,
    )
