"""Experiment recipes: each returns table rows and can write them as CSV."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from ..dynamics import iterate, sample_attractor
from ..filtering import lpma
from ..linear import transition_study
from ..observation import add_noise, generate_series
from ..optim import VARIANTS
from ..validation import lyapunov_exponent, nse_mod, power_spectrum, ten_fold_time
from .config import ExperimentConfig
from .ensemble import model_stats, run_ensemble, stage_rng

__all__ = [
    "Table",
    "error_profile",
    "ensemble_summary",
    "horizon_vs_T",
    "nse0_vs_T",
    "heatmap",
    "optimizer_comparison",
    "filter_noise",
    "bounding_sweep",
    "spectrum",
    "lyapunov",
    "linear_study",
    "record_table",
]

SERIES = {False: "noiseless", True: "noisy"}


@dataclass
class Table:
    name: str
    header: tuple
    rows: list

    def column(self, key: str) -> list:
        i = self.header.index(key)
        return [r[i] for r in self.rows]

    def where(self, **match) -> "Table":
        idx = {self.header.index(k): v for k, v in match.items()}
        rows = [r for r in self.rows if all(r[i] == v for i, v in idx.items())]
        return Table(self.name, self.header, rows)

    def write(self, directory) -> Path:
        path = Path(directory) / f"{self.name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header)
            w.writerows([_cell(v) for v in r] for r in self.rows)
        return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


# ensemble-based experiments ---------------------------------------------------

def error_profile(cfg: ExperimentConfig, noisy=(False, True), results: dict | None = None) -> Table:
    """Median NSE in observation and model space for ``k = -T..K``."""
    results = results or run_ensemble(cfg, noisy)
    rows = []
    for f, res in results.items():
        k, obs, mod = res.profiles()
        rows += [(SERIES[f], int(ki), o, d) for ki, o, d in zip(k, obs, mod)]
    return Table("error_profile", ("series", "k", "median_nse_obs", "median_nse_mod"), rows)


def ensemble_summary(results: dict) -> Table:
    rows = []
    for f, res in results.items():
        h = res.horizon
        nse0 = res.nse0_mod()
        rows.append((SERIES[f], len(res.included), res.n_excluded, res.k_max, h.n_censored,
                     float(np.mean(nse0)) if nse0.size else float("nan"),
                     float(np.median(nse0)) if nse0.size else float("nan")))
    return Table("ensemble_summary", ("series", "n_included", "n_excluded", "k_max", "n_censored",
                                      "mean_nse0_mod", "median_nse0_mod"), rows)


def _sweep_T(cfg, T_list, noisy, stats):
    stats = stats or model_stats(cfg)
    for T in T_list:
        yield T, run_ensemble(cfg.replace(T=int(T)), noisy, stats)


def horizon_vs_T(cfg: ExperimentConfig, T_list, noisy=(False, True), stats=None) -> Table:
    rows = []
    for T, results in _sweep_T(cfg, T_list, noisy, stats):
        for f, res in results.items():
            rows.append((SERIES[f], int(T), res.k_max, len(res.included), res.n_excluded))
    return Table("horizon_vs_T", ("series", "T", "k_max", "n_included", "n_excluded"), rows)


def nse0_vs_T(cfg: ExperimentConfig, T_list, noisy=(False, True), stats=None) -> Table:
    rows = []
    for T, results in _sweep_T(cfg, T_list, noisy, stats):
        for f, res in results.items():
            v = res.nse0_mod()
            rows.append((SERIES[f], int(T), float(np.mean(v)), float(np.median(v)),
                         len(res.included), res.n_excluded))
    return Table("nse0_vs_T", ("series", "T", "mean_nse0_mod", "median_nse0_mod", "n_included",
                               "n_excluded"), rows)


def heatmap(cfg: ExperimentConfig, T_range, m_range, stats=None) -> Table:
    """log10 median initialized discrepancy over a noiseless ``(T, m)`` grid."""
    stats = stats or model_stats(cfg)
    rows = []
    for T in T_range:
        for m in m_range:
            res = run_ensemble(cfg.replace(T=int(T), m=int(m)), False, stats)[False]
            v = res.nse0_mod()
            med = float(np.median(v)) if v.size else float("nan")
            rows.append((int(T), int(m), float(np.log10(med)) if med > 0 else float("-inf"),
                         len(res.included), res.n_excluded))
    return Table("heatmap", ("T", "m", "log10_median_nse0_mod", "n_included", "n_excluded"), rows)


def optimizer_comparison(cfg: ExperimentConfig, variants=VARIANTS, noisy=(False, True),
                         stats=None) -> Table:
    stats = stats or model_stats(cfg)
    rows = []
    for v in variants:
        results = run_ensemble(cfg, noisy, stats, overrides={"optimizer": v})
        for f, res in results.items():
            nse0 = res.nse0_mod()
            rows.append((v, SERIES[f], float(np.mean(nse0)) if nse0.size else float("nan"),
                         float(np.median(nse0)) if nse0.size else float("nan"),
                         len(res.included), res.n_excluded))
    return Table("optimizer_comparison", ("optimizer", "noise", "mean_nse0_mod", "median_nse0_mod",
                                          "n_included", "n_excluded"), rows)


def bounding_sweep(cfg: ExperimentConfig, delta_list, noisy: bool = True, stats=None) -> Table:
    """Rough (bound only) against refined discrepancy at ``t_0`` for a range of ``delta_R``.

    Each ``delta_R`` is the total bounding threshold: ``beta_R`` is pinned to
    the refinement ``beta_r`` and ``alpha_R`` takes the remainder.
    """
    stats = stats or model_stats(cfg)
    model = cfg.build_model()
    base = cfg.pipeline_config()
    noise = cfg.noise_ratio if noisy else 0.0
    rows = []
    for delta in delta_list:
        alpha = float(delta) - noise**2 * base.beta_r
        if not alpha > base.alpha_r:
            raise ValueError(f"delta_R={delta} leaves no room above the refinement threshold")
        res = run_ensemble(cfg, noisy, stats,
                           overrides={"alpha_R": alpha, "beta_R": base.beta_r})[noisy]
        rough, refined = [], []
        for r in res.included:
            x0_rough = iterate(model, r.result.rough, cfg.m * cfg.T)
            rough.append(float(nse_mod(r.truth_now, x0_rough, stats)))
            refined.append(r.nse0_mod)
        rough_med = float(np.median(rough)) if rough else float("nan")
        rows.append((float(delta), rough_med,
                     float(np.median(refined)) if refined else float("nan"), rough_med,
                     len(res.included), res.n_excluded))
    return Table("bounding_sweep", ("delta_R", "nse0_rough", "nse0_refined", "identity",
                                    "n_included", "n_excluded"), rows)


# experiments that do not run the initialization pipeline ----------------------

def filter_noise(cfg: ExperimentConfig, q_list, length: int = 50_000, bins: int = 60,
                 span: float = 4.0) -> tuple[Table, Table]:
    """Histograms of the filtered residual ``lpma(y + noise, q) - y`` in units of sigma_n.

    The residual is taken against the clean series, so it also contains the
    part of the signal the filter removes; that leakage shows up as extra
    variance at large ``q``.
    """
    model = cfg.build_model()
    rng = stage_rng(cfg.seed, 0, 0)
    clean = generate_series(model, cfg.op, sample_attractor(model, rng), length, cfg.m)
    noisy = add_noise(clean, cfg.noise_ratio, rng, cfg.noise)
    sigma_n = cfg.noise_ratio * clean.sigma_y
    edges = np.linspace(-span, span, bins + 1)
    hist_rows, curve_rows = [], []
    for q in q_list:
        resid = (lpma(noisy, int(q)).values - clean.values) / sigma_n
        dens, _ = np.histogram(resid, edges, density=True)
        hist_rows += [(int(q), lo, hi, d) for lo, hi, d in zip(edges[:-1], edges[1:], dens)]
        curve_rows.append((int(q), float(np.var(resid)), float(sps.skew(resid)),
                           float(sps.kurtosis(resid))))
    return (Table("filter_noise_hist", ("q", "bin_left", "bin_right", "density"), hist_rows),
            Table("filter_noise_moments", ("q", "variance", "skewness", "excess_kurtosis"),
                  curve_rows))


def spectrum(cfg: ExperimentConfig, n_runs: int = 100, n_points: int = 4096) -> Table:
    freqs, power = power_spectrum(cfg.build_model(), stage_rng(cfg.seed, 0, 0), n_runs, n_points)
    return Table("spectrum", ("freq", "power"), list(zip(freqs, power)))


def lyapunov(cfg: ExperimentConfig, total_steps: int = 200_000) -> Table:
    model = cfg.build_model()
    lam = lyapunov_exponent(model, stage_rng(cfg.seed, 0, 0), total_steps=total_steps)
    return Table("lyapunov", ("system", "lambda", "m", "t_lambda"),
                 [(cfg.system, lam, cfg.m, ten_fold_time(lam, cfg.m, model.dt))])


def linear_study(seed: int, n_x: int, T_range, m_range, draws: int = 20,
                 extended: bool = True) -> Table:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    T_range, m_range = list(T_range), list(m_range)
    grid = transition_study(rng, n_x, m_range, T_range, draws, extended)
    rows = [(int(T), int(m), float(grid[i, j]))
            for i, T in enumerate(T_range) for j, m in enumerate(m_range)]
    return Table("linear_study", ("T", "m", "median_error"), rows)


def record_table(results: dict) -> list[dict]:
    return [r.summary() for res in results.values() for r in res.records]

