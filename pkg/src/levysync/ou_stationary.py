"""Stationary solutions of the unit-rate Langevin equation ``dX = -X dt + c dL``.

The stationary solution is ``Xbar_t = c e^{-t} int_{-inf}^t e^s dL_s``.  It is
built with the one-pass recursion

    Xbar_{i+1} = e^{-h_i} Xbar_i + c * (L(tau_{i+1}) - L(tau_i)),

started from zero at the left end of the path support.  The recursion is
exact for the exponential kernel between nodes; each cell's increment is
credited at the node closing the cell, which keeps ``dXbar + Xbar dt - c dL``
first order in the step, with jumps reproduced exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import AlignmentError, OutOfSupportError, ParameterError, ShapeError
from .levy_process import LevyPath, TimeGrid, truncation_bound

TRUNCATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OUTrajectory:
    """Stationary Ornstein-Uhlenbeck trajectory on ``grid``."""

    path_ref: str
    c: np.ndarray
    grid: TimeGrid
    values: np.ndarray  # (M+1, d)
    truncation_error: np.ndarray  # (M+1,)

    @property
    def times(self):
        return self.grid.times

    def window(self, t_from, t_to) -> "OUTrajectory":
        sub = self.grid.window(t_from, t_to)
        idx = self.grid.aligned_indices(sub)
        return OUTrajectory(self.path_ref, self.c, sub, self.values[idx], self.truncation_error[idx])

    def restrict(self, grid: TimeGrid) -> "OUTrajectory":
        idx = self.grid.aligned_indices(grid)
        return OUTrajectory(self.path_ref, self.c, grid, self.values[idx], self.truncation_error[idx])

    def scaled(self, factor) -> "OUTrajectory":
        return OUTrajectory(
            self.path_ref, self.c * factor, self.grid, self.values * factor,
            self.truncation_error * abs(factor),
        )


def _coefficients(c, path: LevyPath) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.ndim != 1:
        raise ShapeError(f"c must be a vector, got shape {c.shape}")
    if np.any(c == 0):
        raise ParameterError("every component of c must be nonzero")
    if path.dimension not in (1, c.size):
        raise ShapeError(f"path dimension {path.dimension} incompatible with c of size {c.size}")
    return c


def _unit_convolution(path: LevyPath) -> np.ndarray:
    """``e^{-t} int_{T_left}^t e^s dL_s`` on every node of the path (c = 1)."""
    h = path.grid.cell_lengths
    inc = path.increments
    y = np.zeros_like(path.values)
    if h.size == 0:
        return y
    # all cells but possibly the last share the nominal step
    regular = h.size - 1 if h.size > 1 and not np.isclose(h[-1], h[0], rtol=1e-9, atol=0) else h.size
    a = np.exp(-path.grid.step)
    y[1: regular + 1] = lfilter([1.0], [1.0, -a], inc[:regular], axis=0)
    for i in range(regular, h.size):
        y[i + 1] = np.exp(-h[i]) * y[i] + inc[i]
    return y


def stationary_convolution(path: LevyPath, c, grid: TimeGrid = None) -> OUTrajectory:
    """Stationary OU trajectory driven by ``path`` with coefficient ``c``.

    Parameters
    ----------
    path : LevyPath
        Driving path; its left support is the truncation point ``T_left``.
    c : array_like
        Nonzero coefficient vector.  A scalar path is broadcast across it.
    grid : TimeGrid, optional
        Output grid, aligned with the path grid.  By default the output
        starts at the first node from which the truncation tolerance holds.

    Raises
    ------
    ParameterError
        If ``c`` has a zero component.
    OutOfSupportError
        If the path does not reach far enough left of ``grid.t_start``.
    """
    c = _coefficients(c, path)
    y = _unit_convolution(path)
    values = y * c
    t_left = path.grid.t_start
    env = path.envelope()
    err = truncation_bound(env, 1.0, t_left, t_left) * np.exp(-(path.times - t_left)) * np.linalg.norm(c)
    ok = err < TRUNCATION_TOL * (1.0 + np.linalg.norm(values, axis=1))
    if grid is None:
        bad = np.flatnonzero(~ok)
        first = 0 if bad.size == 0 else bad[-1] + 1
        if first >= len(path.grid) - 1:
            raise OutOfSupportError("path support too short for the truncation tolerance")
        grid = TimeGrid(float(path.times[first]), path.grid.t_end, path.grid.step)
    idx = path.grid.aligned_indices(grid)
    if not ok[idx].all():
        raise OutOfSupportError(
            f"path support starting at {t_left} is insufficient for a stationary start at {grid.t_start}"
        )
    return OUTrajectory(path.ref, c, grid, values[idx], err[idx])


def _aligned_increments(path: LevyPath, grid: TimeGrid) -> np.ndarray:
    try:
        idx = path.grid.aligned_indices(grid)
    except (OutOfSupportError, ValueError) as exc:
        raise AlignmentError(f"path and trajectory grids are not aligned: {exc}") from exc
    return np.diff(path.values[idx], axis=0)


def jump_cells(path: LevyPath, grid: TimeGrid) -> np.ndarray:
    """Boolean mask over the cells of ``grid`` that contain a jump of ``path``."""
    mask = np.zeros(len(grid) - 1, dtype=bool)
    if path.jump_times.size:
        cells = np.searchsorted(grid.times, path.jump_times, side="left") - 1
        cells = cells[(cells >= 0) & (cells < mask.size)]
        mask[cells] = True
    return mask


def langevin_residual(ou: OUTrajectory, path: LevyPath, exclude_jump_cells=False) -> float:
    """``max_i |dXbar_i + Xbar_i dt_i - c * dL_i| / dt_i`` over the cells of ``ou.grid``."""
    dl = _aligned_increments(path, ou.grid)
    h = ou.grid.cell_lengths[:, None]
    r = np.diff(ou.values, axis=0) + ou.values[:-1] * h - ou.c * dl
    r = np.linalg.norm(r, axis=1) / h[:, 0]
    if exclude_jump_cells:
        r = r[~jump_cells(path, ou.grid)]
    return float(r.max()) if r.size else 0.0
