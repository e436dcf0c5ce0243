"""Seeded ensemble execution with worker-count-independent results."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..dynamics import TrajectoryOverflow, sample_attractor
from ..objective import CostEvaluationError
from ..observation import add_noise, generate_series
from ..pipeline import GuessError, InitializationResult, initialize
from ..validation import (
    HorizonReport,
    ModelSpaceStats,
    estimate_model_stats,
    median_profile,
    nse_mod,
    nse_obs,
    predictability_horizon,
)
from .config import ExperimentConfig

__all__ = [
    "TRUTH",
    "NOISE",
    "PIPELINE",
    "STATS",
    "stage_rng",
    "stage_seed",
    "RunRecord",
    "EnsembleResult",
    "model_stats",
    "run_one",
    "run_ensemble",
]

log = logging.getLogger(__name__)

# stage tags mixed into every per-run seed
TRUTH, NOISE, PIPELINE, STATS = 0, 1, 2, 3

# failures that exclude a run from aggregates instead of aborting the ensemble
RUN_ERRORS = (GuessError, CostEvaluationError, TrajectoryOverflow, FloatingPointError,
              np.linalg.LinAlgError)


def stage_rng(master: int, run_id: int, stage: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master, run_id, stage]))


def stage_seed(master: int, run_id: int, stage: int) -> int:
    return int(np.random.SeedSequence([master, run_id, stage]).generate_state(1, np.uint32)[0])


@dataclass(eq=False)
class RunRecord:
    """One experiment: truth, initialization, and per-step errors for ``k = -T..K``."""

    run_id: int
    seed: int
    noisy: bool
    truth_start: np.ndarray
    truth_now: np.ndarray
    result: InitializationResult | None = None
    nse_obs: np.ndarray | None = None
    nse_mod: np.ndarray | None = None
    horizon: int | None = None
    censored: bool = False
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.result is not None

    @property
    def nse0_mod(self) -> float:
        return float(self.nse_mod[self._k0]) if self.ok else float("nan")

    @property
    def nse0_obs(self) -> float:
        return float(self.nse_obs[self._k0]) if self.ok else float("nan")

    @property
    def _k0(self) -> int:
        return self.nse_obs.size - self._window

    _window: int = field(default=0, repr=False)

    def summary(self) -> dict:
        out = {"run_id": self.run_id, "seed": self.seed, "noisy": self.noisy, "ok": self.ok,
               "error": self.error, "truth_start": self.truth_start.tolist(),
               "truth_now": self.truth_now.tolist()}
        if self.ok:
            r = self.result
            out.update(horizon=self.horizon, censored=self.censored, nse0_obs=self.nse0_obs,
                       nse0_mod=self.nse0_mod, cost=r.cost_assimilated, bounded=r.bounded,
                       refined=r.refined, bound_steps=r.bound_steps_used,
                       refine_iters=r.refine_trace.iterations_used,
                       assimilated=r.assimilated.tolist(), initialized=r.initialized.tolist())
        return out


@dataclass(eq=False)
class EnsembleResult:
    config: ExperimentConfig
    noisy: bool
    records: list

    @property
    def included(self) -> list:
        return [r for r in self.records if r.ok]

    @property
    def n_excluded(self) -> int:
        return len(self.records) - len(self.included)

    @property
    def horizon(self) -> HorizonReport:
        return predictability_horizon([r.nse_obs[self.config.T:] for r in self.included])

    @property
    def k_max(self) -> float:
        return self.horizon.k_max

    def nse0_mod(self) -> np.ndarray:
        return np.array([r.nse0_mod for r in self.included])

    def profiles(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(k, median NSE_obs, median NSE_mod)`` over included runs."""
        ok = self.included
        k = np.arange(-self.config.T, self.config.window + 1)
        if not ok:
            nan = np.full(k.size, np.nan)
            return k, nan, nan
        return (k, median_profile([r.nse_obs for r in ok]),
                median_profile([r.nse_mod for r in ok]))


def model_stats(cfg: ExperimentConfig) -> ModelSpaceStats:
    """Microstate covariance for ``cfg``'s model, seeded independently of the runs."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, STATS]))
    return estimate_model_stats(cfg.build_model(), rng, cfg.stats_steps)


def run_one(cfg: ExperimentConfig, run_id: int, noisy: bool, stats: ModelSpaceStats,
            overrides: dict | None = None) -> RunRecord:
    """Run ``run_id`` of the ensemble; depends only on ``(cfg, run_id, noisy)``.

    The truth is drawn from the TRUTH stage alone, so the noiseless and noisy
    variants of a run share the same ground-truth microstate.
    """
    model, op = cfg.build_model(), cfg.op
    T, m, K = cfg.T, cfg.m, cfg.window
    truth_rng = stage_rng(cfg.seed, run_id, TRUTH)
    x_start = sample_attractor(model, truth_rng)
    truth = model.run(x_start, T + K + 1, m)[0]
    rec = RunRecord(run_id, stage_seed(cfg.seed, run_id, PIPELINE), noisy, x_start, truth[T],
                    _window=K + 1)
    series = generate_series(model, op, x_start, T, m)
    if noisy:
        series = add_noise(series, cfg.noise_ratio, stage_rng(cfg.seed, run_id, NOISE), cfg.noise)
    try:
        result = initialize(model, op, series, cfg.pipeline_config(seed=rec.seed,
                                                                   **(overrides or {})))
        est = model.run(result.assimilated, T + K + 1, m)[0]
    except RUN_ERRORS as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        log.warning("run %d excluded: %s", run_id, rec.error)
        return rec
    clean = op(truth)
    rec.result = result
    # measured against the clean truth so noise-free error is visible below the noise floor
    rec.nse_obs = nse_obs(clean, op(est), series.sigma_y)
    rec.nse_mod = nse_mod(truth, est, stats)
    report = predictability_horizon([rec.nse_obs[T:]])
    rec.horizon, rec.censored = int(report.indices[0]), bool(report.censored[0])
    return rec


def _run_many(cfg, stats, overrides, job):
    run_id, noisy = job
    return run_one(cfg, run_id, noisy, stats, overrides)


def run_ensemble(cfg: ExperimentConfig, noisy: bool | tuple = (False, True),
                 stats: ModelSpaceStats | None = None, overrides: dict | None = None,
                 workers: int | None = None) -> dict:
    """Run ``cfg.ensemble_size`` experiments per noise setting.

    Returns ``{noisy_flag: EnsembleResult}``.  Results are collected in run
    order, so they do not depend on ``workers``.
    """
    flags = (noisy,) if isinstance(noisy, bool) else tuple(noisy)
    stats = stats or model_stats(cfg)
    workers = workers or cfg.workers
    jobs = [(i, f) for f in flags for i in range(cfg.ensemble_size)]
    fn = partial(_run_many, cfg, stats, overrides)
    if workers == 1:
        records = [fn(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    out = {}
    for f in flags:
        recs = [r for r in records if r.noisy == f]
        out[f] = EnsembleResult(cfg, f, recs)
        if out[f].n_excluded:
            log.info("%s ensemble: %d of %d runs excluded", "noisy" if f else "noiseless",
                     out[f].n_excluded, len(recs))
    return out
