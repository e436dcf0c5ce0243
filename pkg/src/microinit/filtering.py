"""Three-point low-pass moving-average (LPMA) noise reduction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observation import ObservationSeries

__all__ = ["FilterReport", "lpma_once", "lpma", "snr_gain"]


@dataclass(frozen=True)
class FilterReport:
    q: int
    r0: float


def lpma_once(values) -> np.ndarray:
    """One pass of the 1/4-1/2-1/4 smoother; endpoints average with their only neighbour."""
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("lpma needs a 1-D sequence of length >= 2")
    z = np.empty_like(y)
    z[1:-1] = 0.5 * y[1:-1] + 0.25 * (y[:-2] + y[2:])
    z[0] = 0.5 * y[0] + 0.5 * y[1]
    z[-1] = 0.5 * y[-1] + 0.5 * y[-2]
    return z


def lpma(series: ObservationSeries, q: int) -> ObservationSeries:
    """Apply :func:`lpma_once` ``q`` times; ``sigma_y`` is recomputed on the result."""
    if q < 0:
        raise ValueError("q must be non-negative")
    if q == 0:
        return series
    z = series.values
    for _ in range(q):
        z = lpma_once(z)
    return series.with_values(z, sigma_y=None)


def snr_gain(clean, noisy, filtered) -> float:
    """Signal-to-noise gain ``sqrt(sum eps^2 / sum eps_q^2)`` of a filter."""
    clean, noisy, filtered = (np.asarray(a, dtype=float) for a in (clean, noisy, filtered))
    if not (clean.shape == noisy.shape == filtered.shape):
        raise ValueError("sequences must have equal length")
    denom = np.sum((filtered - clean) ** 2)
    if denom == 0:
        raise ZeroDivisionError("filtered residual is identically zero")
    return float(np.sqrt(np.sum((noisy - clean) ** 2) / denom))
