"""Out-of-sample error metrics, predictability horizon, Lyapunov times, spectra."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemModel, sample_attractor

__all__ = [
    "ModelSpaceStats",
    "estimate_model_stats",
    "nse_obs",
    "nse_mod",
    "HorizonReport",
    "predictability_horizon",
    "median_profile",
    "lyapunov_exponent",
    "ten_fold_time",
    "periodogram",
    "power_spectrum",
]

# k_max threshold: mean squared distance of two independent attractor points over the variance
DIVERGENCE_LEVEL = 2.0


@dataclass(frozen=True, eq=False)
class ModelSpaceStats:
    """Microstate covariance with a diagonal ridge.

    ``singular`` records whether the raw covariance was numerically rank
    deficient before the ridge was added.
    """

    covariance: np.ndarray
    regularization: float = 0.0
    singular: bool = field(default=False)

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
            raise ValueError("covariance must be a symmetric square matrix")
        w = np.linalg.eigvalsh(cov)
        object.__setattr__(self, "singular", bool(w[0] <= 1e-12 * max(w[-1], 1e-300)))
        reg = cov + self.regularization * np.eye(cov.shape[0])
        if np.linalg.eigvalsh(reg)[0] <= 0:
            raise np.linalg.LinAlgError("covariance is not positive definite after regularization")
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_precision", np.linalg.inv(reg))

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    @property
    def precision(self) -> np.ndarray:
        return self._precision

    @classmethod
    def from_states(cls, states, ridge: float = 1e-8) -> "ModelSpaceStats":
        """Sample covariance of ``states`` plus ``ridge * trace / N`` on the diagonal."""
        cov = np.atleast_2d(np.cov(np.asarray(states, dtype=float), rowvar=False))
        return cls(cov, ridge * np.trace(cov) / cov.shape[0])


def estimate_model_stats(model: SystemModel, rng: np.random.Generator, n_steps: int = 100_000,
                         ridge: float = 1e-8, burn_in: int = 5000) -> ModelSpaceStats:
    x = sample_attractor(model, rng, burn_in)
    return ModelSpaceStats.from_states(model.run(x, n_steps, 1)[0], ridge)


def nse_obs(y, yhat, sigma_y: float):
    """Squared observation error in units of the series variance."""
    if not sigma_y > 0:
        raise ValueError("sigma_y must be positive")
    return (np.asarray(y, dtype=float) - np.asarray(yhat, dtype=float)) ** 2 / sigma_y**2


def nse_mod(x, xhat, stats: ModelSpaceStats):
    """Mahalanobis squared error per dimension; works on stacked states (last axis)."""
    d = np.asarray(x, dtype=float) - np.asarray(xhat, dtype=float)
    if d.shape[-1] != stats.dim:
        raise ValueError("state dimension does not match the statistics")
    return np.einsum("...i,ij,...j->...", d, stats.precision, d) / stats.dim


@dataclass(frozen=True, eq=False)
class HorizonReport:
    """First-crossing indices of ``NSE >= 2`` per run.

    Runs that never cross are censored at the window length ``K + 1`` and
    still enter the mean.
    """

    indices: np.ndarray
    censored: np.ndarray
    window: int

    @property
    def k_max(self) -> float:
        return float(np.mean(self.indices)) if self.indices.size else float("nan")

    @property
    def n_censored(self) -> int:
        return int(np.sum(self.censored))

    def cdf(self, ks=None) -> tuple[np.ndarray, np.ndarray]:
        """Fraction of runs that have crossed by step ``k``."""
        if ks is None:
            ks = np.arange(self.window)
        ks = np.asarray(ks)
        crossed = np.where(self.censored, np.iinfo(np.int64).max, self.indices)
        frac = (crossed[None, :] <= ks[:, None]).mean(axis=1) if self.indices.size else np.zeros(ks.size)
        return ks, frac


def predictability_horizon(nse_runs, level: float = DIVERGENCE_LEVEL) -> HorizonReport:
    """``nse_runs``: per-run sequences ``NSE_k`` for ``k = 0..K`` (equal length)."""
    runs = [np.asarray(r, dtype=float) for r in nse_runs]
    if not runs:
        return HorizonReport(np.empty(0, dtype=int), np.empty(0, dtype=bool), 0)
    window = runs[0].size
    idx, cens = [], []
    for r in runs:
        if r.size != window:
            raise ValueError("all runs need the same window length")
        hit = np.flatnonzero(r >= level)
        idx.append(hit[0] if hit.size else window)
        cens.append(hit.size == 0)
    return HorizonReport(np.array(idx, dtype=int), np.array(cens, dtype=bool), window)


def median_profile(curves) -> np.ndarray:
    """Per-step median across runs (rows)."""
    return np.median(np.asarray(curves, dtype=float), axis=0)


def lyapunov_exponent(model: SystemModel, rng: np.random.Generator, renorm_interval: int = 10,
                      total_steps: int = 200_000, d0: float = 1e-8, transient: int = 5000) -> float:
    """Largest Lyapunov exponent per unit time by the two-trajectory renormalization method.

    A companion trajectory starts ``d0`` away in a random direction; every
    ``renorm_interval`` steps the log growth of the separation is accumulated
    and the companion is pulled back to distance ``d0``.
    """
    if renorm_interval < 1 or total_steps < renorm_interval:
        raise ValueError("need total_steps >= renorm_interval >= 1")
    x = sample_attractor(model, rng, transient)
    u = rng.standard_normal(model.dim)
    pair = np.stack([x, x + d0 * u / np.linalg.norm(u)])
    n_epochs = total_steps // renorm_interval
    log_sum = 0.0
    for _ in range(n_epochs):
        pair = model.run(pair, 2, renorm_interval)[:, 1]
        sep = pair[1] - pair[0]
        dist = np.linalg.norm(sep)
        if not (np.isfinite(dist) and dist > 0):
            raise FloatingPointError("separation collapsed or overflowed")
        log_sum += np.log(dist / d0)
        pair[1] = pair[0] + sep * (d0 / dist)
    return log_sum / (n_epochs * renorm_interval * model.dt)


def ten_fold_time(lam: float, m: int, dt: float) -> float:
    """Samples needed for a tenfold error growth at exponent ``lam``."""
    if not lam > 0:
        raise ValueError("Lyapunov exponent must be positive")
    return np.log(10.0) / (m * dt * lam)


def periodogram(track, spacing: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Mean-removed one-sided periodogram normalized to unit total power.

    Frequencies are in cycles per unit of ``spacing`` (cycles per sample by default).
    """
    track = np.asarray(track, dtype=float)
    power = np.abs(np.fft.rfft(track - track.mean())) ** 2
    total = power.sum()
    if total == 0:
        raise ValueError("constant track has no spectrum")
    return np.fft.rfftfreq(track.size, d=spacing), power / total


def power_spectrum(model: SystemModel, rng: np.random.Generator, n_runs: int = 100,
                   n_points: int = 4096, op=None, component: int = 0, stride: int = 1,
                   burn_in: int = 5000) -> tuple[np.ndarray, np.ndarray]:
    """Average normalized periodogram over random in-attractor starts.

    The track is ``component`` of the state (or ``op`` of the state when
    given), sampled every ``stride`` model steps.  Frequencies are in cycles
    per model time unit, so systems with different step sizes line up.
    """
    if n_points < 2 or n_points & (n_points - 1):
        raise ValueError("n_points must be a power of two")
    acc = None
    for _ in range(n_runs):
        x = sample_attractor(model, rng, burn_in)
        states = model.run(x, n_points, stride)[0]
        track = op(states) if op is not None else states[:, component]
        freqs, p = periodogram(track, stride * model.dt)
        acc = p if acc is None else acc + p
    return freqs, acc / n_runs
