"""Exact initial-state recovery for noiseless time-varying linear systems.

For ``x_{k+1} = F_k x_k`` and ``y_k = H_k x_k`` every observation is linear in
the initial state, ``y_k = M_k x_0`` with ``M_k = H_k F_{k-1} ... F_0``.
Stacking rows gives the observation matrix; the initial state is identified
exactly when that matrix has full column rank.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import special_ortho_group

__all__ = [
    "LinearTVSystem",
    "ObservationMatrix",
    "random_system",
    "row_indices",
    "build_matrix",
    "recover",
    "transition_study",
]

RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearTVSystem:
    F_seq: tuple
    H_seq: tuple

    def __post_init__(self):
        F = tuple(np.atleast_2d(np.asarray(f, dtype=float)) for f in self.F_seq)
        H = tuple(np.asarray(h, dtype=float).ravel() for h in self.H_seq)
        n = H[0].size if H else (F[0].shape[0] if F else 0)
        for f in F:
            if f.shape != (n, n):
                raise ValueError(f"every F_k must be {n}x{n}")
        for h in H:
            if h.size != n:
                raise ValueError(f"every H_k must have {n} entries")
            if np.any(h == 0):
                raise ValueError("observation rows must have all non-zero entries")
        object.__setattr__(self, "F_seq", F)
        object.__setattr__(self, "H_seq", H)

    @property
    def dim(self) -> int:
        return self.H_seq[0].size

    def simulate(self, x0, n: int) -> np.ndarray:
        """Observations ``y_0..y_{n-1}`` generated from ``x0``."""
        x = np.asarray(x0, dtype=float)
        ys = np.empty(n)
        for k in range(n):
            ys[k] = self.H_seq[k] @ x
            if k < n - 1:
                x = self.F_seq[k] @ x
        return ys


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    rows: np.ndarray
    row_indices: np.ndarray


def random_system(rng: np.random.Generator, n_x: int, length: int,
                  scale=(0.9, 1.1), h_range=(0.5, 1.5)) -> LinearTVSystem:
    """Rotations times a mild diagonal scaling; observation weights bounded away from 0."""
    def rotation():
        if n_x == 1:
            return np.array([[1.0]])
        return special_ortho_group.rvs(n_x, random_state=rng)

    F = [rotation() @ np.diag(rng.uniform(*scale, n_x)) for _ in range(length)]
    H = [rng.uniform(*h_range, n_x) for _ in range(length)]
    return LinearTVSystem(tuple(F), tuple(H))


def row_indices(T: int, m: int, extended: bool, literal: bool = False) -> np.ndarray:
    """Time indices of the stacked rows.

    Extended: every step ``0..mT-1``.  Reduced: one row per observation,
    ``0, m, ..., m(T-1)``; ``literal=True`` instead uses the sparser set
    ``{0, m-1, 2m-1, ..., mT-1}`` (duplicates dropped).
    """
    if T < 1 or m < 1:
        raise ValueError("T and m must be >= 1")
    if extended:
        return np.arange(m * T)
    if literal:
        return np.unique(np.r_[0, m * np.arange(1, T + 1) - 1])
    return m * np.arange(T)


def build_matrix(system: LinearTVSystem, T: int, m: int, extended: bool = True,
                 literal: bool = False) -> ObservationMatrix:
    idx = row_indices(T, m, extended, literal)
    need = int(idx[-1]) + 1
    if len(system.H_seq) < need or len(system.F_seq) < need - 1:
        raise ValueError(f"system too short: need {need} observation rows")
    rows = np.empty((idx.size, system.dim))
    prop = np.eye(system.dim)  # F_{k-1} ... F_0
    want = set(idx.tolist())
    r = 0
    for k in range(need):
        if k in want:
            rows[r] = system.H_seq[k] @ prop
            r += 1
        if k < need - 1:
            prop = system.F_seq[k] @ prop
    return ObservationMatrix(rows, idx)


def recover(matrix: ObservationMatrix, y) -> tuple[np.ndarray, int, bool, float]:
    """Minimum-norm least-squares ``x0`` with its numerical rank.

    Returns ``(x0, rank, unique, residual_norm)``; ``unique`` means full
    column rank.
    """
    A = matrix.rows
    y = np.asarray(y, dtype=float)
    if y.size != A.shape[0]:
        raise ValueError("y length must equal the number of rows")
    x0, _, rank, _ = np.linalg.lstsq(A, y, rcond=RANK_RTOL)
    residual = float(np.linalg.norm(A @ x0 - y))
    return x0, int(rank), bool(rank == A.shape[1]), residual


def transition_study(rng: np.random.Generator, n_x: int, m_values, T_values, draws: int = 20,
                     extended: bool = True) -> np.ndarray:
    """Median relative recovery error on a ``(T, m)`` grid, shape ``(len(T), len(m))``."""
    m_values, T_values = list(m_values), list(T_values)
    grid = np.empty((len(T_values), len(m_values)))
    for i, T in enumerate(T_values):
        for j, m in enumerate(m_values):
            errs = []
            for _ in range(draws):
                system = random_system(rng, n_x, m * T)
                x0 = rng.standard_normal(n_x)
                M = build_matrix(system, T, m, extended)
                y = M.rows @ x0
                xh, *_ = recover(M, y)
                errs.append(np.linalg.norm(xh - x0) / np.linalg.norm(x0))
            grid[i, j] = np.median(errs)
    return grid
