"""The averaged random ODE and its stationary solution.

The averaged system is

    dZ/dt = mean_j f_j(Xbar_j + Z) + mean_j (Xbar_j + Z),

the limit of every component of the coupled system as the coupling grows.
Its stochastic counterpart under ``z = Z + mean_j Xbar_j`` reads

    dz = [mean_j f_j(Xbar_j + z - m) + z - m] dt + mean_j c_j dL_j,
    m = mean_j Xbar_j,

which collapses to ``dz = mean_j f_j(z) dt + mean_j c_j dL_j`` only when
the ``Xbar_j`` coincide and the linear part ``z - m`` is dropped.  Both forms
are available in :func:`averaged_sode_residual`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .attractor import DEFAULT_HORIZONS, DEFAULT_TOL, AttractorEstimate, _default_x0, pullback_estimate
from .coupled_system import (
    SystemConfig, Trajectory, _apply_drifts, _coefficient_matrix, check_step, euler,
    path_increments, stack_ou,
)
from .drifts import DriftSpec
from .errors import ParameterError, ShapeError
from .levy_process import LevyPath, TimeGrid
from .ou_stationary import OUTrajectory, stationary_convolution


@dataclass(frozen=True, eq=False)
class AveragedConfig:
    """Averaged system of ``N = len(drifts)`` components; there is no coupling."""

    drifts: Sequence[DriftSpec]
    c: np.ndarray
    d: int
    grid: TimeGrid
    seed: Optional[int] = None

    def __post_init__(self):
        drifts = tuple(self.drifts)
        if not drifts:
            raise ParameterError("at least one drift is required")
        object.__setattr__(self, "drifts", drifts)
        c = _coefficient_matrix(self.c, len(drifts), self.d)
        c.flags.writeable = False
        object.__setattr__(self, "c", c)

    @classmethod
    def from_system(cls, config: SystemConfig) -> "AveragedConfig":
        return cls(config.drifts, config.c, config.d, config.grid, config.seed)

    @property
    def N(self) -> int:
        return len(self.drifts)

    @property
    def l(self) -> float:
        return min(dr.l for dr in self.drifts)

    @property
    def max_step(self) -> float:
        return 2.0 / max(dr.l for dr in self.drifts)

    def with_grid(self, grid: TimeGrid) -> "AveragedConfig":
        return AveragedConfig(self.drifts, self.c, self.d, grid, self.seed)


def averaged_rhs(config: AveragedConfig, z, ou_states) -> np.ndarray:
    """Right-hand side at ``z`` (shape ``(..., d)``) given OU states ``(N, d)``."""
    z = np.asarray(z, dtype=float)
    ou_states = np.asarray(ou_states, dtype=float)
    if z.shape[-1] != config.d or ou_states.shape[-2:] != (config.N, config.d):
        raise ShapeError(f"expected z (..., {config.d}) and OU states ({config.N}, {config.d})")
    u = z[..., None, :] + ou_states
    # same arithmetic as the coupled right-hand side, so N = 1 agrees bit for bit
    return (_apply_drifts(config.drifts, u) + u).mean(axis=-2)


def _states(config: AveragedConfig, ou_values, z0) -> np.ndarray:
    check_step(config.grid, config.max_step)
    return euler(lambda z, xb: averaged_rhs(config, z, xb), z0, config.grid, ou_values)


def integrate_averaged_rode(config: AveragedConfig, ou: Sequence[OUTrajectory], Z0) -> Trajectory:
    """Euler solution of the averaged random ODE; the trajectory has one block."""
    z0 = np.broadcast_to(np.asarray(Z0, dtype=float), (config.d,))
    states = _states(config, stack_ou(ou, config.grid, config.N), z0)
    return Trajectory(config.grid, states[:, None, :])


def averaged_ou(config: AveragedConfig, paths: Sequence[LevyPath], grid: TimeGrid = None) -> list:
    if len(paths) != config.N:
        raise ParameterError(f"expected {config.N} paths, got {len(paths)}")
    grid = config.grid if grid is None else grid
    return [stationary_convolution(p, config.c[j], grid) for j, p in enumerate(paths)]


def averaged_radius(config: AveragedConfig, ou_values: np.ndarray, grid: TimeGrid) -> float:
    """``sqrt(1 + mean_j int_{t0}^0 e^{(2l - 4) tau} (|f_j(Xbar_j)|^2 + |Xbar_j|^2) dtau)``."""
    g = (_apply_drifts(config.drifts, ou_values) ** 2).sum(axis=-1) + (ou_values ** 2).sum(axis=-1)
    tau = grid.times[:-1]
    weight = np.exp((2.0 * config.l - 4.0) * tau) * grid.cell_lengths
    return float(np.sqrt(1.0 + (weight @ g[:-1]).mean()))


def averaged_pullback_point(
    config: AveragedConfig,
    paths: Sequence[LevyPath],
    horizons: Sequence[float] = DEFAULT_HORIZONS,
    Z0_set=None,
    tol=DEFAULT_TOL,
) -> AttractorEstimate:
    """Pullback estimate of the averaged attractor point ``Zbar`` at time 0."""
    full = TimeGrid(min(horizons), 0.0, config.grid.step)
    ou_values = stack_ou(averaged_ou(config, paths, full), full, config.N)
    z0 = _default_x0((config.d,)) if Z0_set is None else np.asarray(Z0_set, dtype=float)

    def run(t0, batch):
        grid = full.window(t0, 0.0)
        return _states(config.with_grid(grid), ou_values[full.aligned_indices(grid)], batch)[-1]

    est = pullback_estimate(run, horizons, z0, tol, config.seed)
    est.radius = averaged_radius(config, ou_values, full)
    if not est.contained:
        est.diagnostics.append("attractor point outside the absorbing ball")
    return est


def two_solution_gap(config: AveragedConfig, paths: Sequence[LevyPath], Z0, Z1) -> np.ndarray:
    """``|Z_1(t) - Z_2(t)|^2`` on ``config.grid`` for two solutions on the same path."""
    ou_values = stack_ou(averaged_ou(config, paths), config.grid, config.N)
    batch = np.stack([np.broadcast_to(Z0, (config.d,)), np.broadcast_to(Z1, (config.d,))]).astype(float)
    states = _states(config, ou_values, batch)
    diff = states[:, 0] - states[:, 1]
    return (diff ** 2).sum(axis=-1)


def stationary_reconstruction(config: AveragedConfig, paths: Sequence[LevyPath], horizon=-20.0):
    """``z(t) = Zbar(theta_t omega) + mean_j Xbar_j(t)`` on ``config.grid``.

    ``Zbar(theta_t omega)`` is the pullback solution started at ``horizon``
    and carried through ``config.grid``; by the stationary-orbit property it
    coincides with the attractor point of the shifted path.

    Returns
    -------
    z : ndarray, shape (M+1, d)
    ou_values : ndarray, shape (M+1, N, d)
    """
    grid = config.grid
    if not horizon < grid.t_start:
        raise ParameterError(f"horizon {horizon} must precede the grid start {grid.t_start}")
    full = TimeGrid(float(horizon), grid.t_end, grid.step)
    ou_all = stack_ou(averaged_ou(config, paths, full), full, config.N)
    z_all = _states(config.with_grid(full), ou_all, np.zeros(config.d))
    idx = full.aligned_indices(grid)
    ou_values = ou_all[idx]
    return z_all[idx] + ou_values.mean(axis=1), ou_values


def averaged_sode_drift(config: AveragedConfig, z, ou_states, form="equivalent") -> np.ndarray:
    if form == "printed":
        return _apply_drifts(config.drifts, np.broadcast_to(np.asarray(z)[..., None, :], ou_states.shape)).mean(axis=-2)
    if form != "equivalent":
        raise ParameterError(f"unknown form {form!r}")
    m = ou_states.mean(axis=-2)
    u = ou_states + (z - m)[..., None, :]
    return _apply_drifts(config.drifts, u).mean(axis=-2) + (z - m)


def averaged_sode_residual(config: AveragedConfig, paths: Sequence[LevyPath], horizon=-20.0, form="equivalent") -> float:
    """``max_i |dz_i - h_i drift(z_i) - mean_j c_j dL_j| / h_i`` along the reconstruction."""
    z, ou_values = stationary_reconstruction(config, paths, horizon)
    grid = config.grid
    h = grid.cell_lengths
    noise = path_increments(paths, config.c, grid).mean(axis=1)
    drift = averaged_sode_drift(config, z[:-1], ou_values[:-1], form)
    r = np.diff(z, axis=0) - h[:, None] * drift - noise
    return float((np.linalg.norm(r, axis=1) / h).max())
