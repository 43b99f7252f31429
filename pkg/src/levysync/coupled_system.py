"""Ring-coupled random and stochastic ODE systems.

Component ``j`` of the random ODE evolves by

    dx_j/dt = F_j(x_j, Xbar_j) + lam * (x_{j-1} - 2 x_j + x_{j+1}),
    F_j(x, Xbar) = f_j(x + Xbar) + x + Xbar,

with cyclic indices.  The stochastic form integrated by
:func:`integrate_coupled_sode` is the exact image of this system under
``X = x + Xbar``:

    dX_j = [f_j(X_j) + X_j - Xbar_j + lam * (Lap X - Lap Xbar)_j] dt + c_j dL_j.

Both integrators are explicit Euler with left-point evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .drifts import DriftSpec
from .errors import AlignmentError, DivergenceError, ParameterError, ShapeError, StepSizeError
from .levy_process import LevyPath, TimeGrid
from .ou_stationary import OUTrajectory, stationary_convolution

BLOWUP = 1e12


def _coefficient_matrix(c, n, d) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim == 1 and c.size == n and c.size != d:
        c = c[:, None]
    try:
        c = np.broadcast_to(c, (n, d)).copy()
    except ValueError:
        raise ShapeError(f"cannot broadcast c of shape {c.shape} to ({n}, {d})") from None
    if np.any(c == 0):
        raise ParameterError("noise coefficients c_j must have no zero entries")
    return c


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Full definition of a ring-coupled experiment.

    ``c`` may be a scalar, a length-``d`` vector shared by all components, or
    an ``(N, d)`` array.  ``N = 1`` is admitted and gives the uncoupled
    single-component system.
    """

    N: int
    d: int
    lam: float
    drifts: Sequence[DriftSpec]
    c: np.ndarray
    grid: TimeGrid
    seed: Optional[int] = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N}")
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"d must be a positive integer, got {self.d}")
        if not self.lam >= 0:
            raise ParameterError(f"coupling lambda must be >= 0, got {self.lam}")
        drifts = tuple(self.drifts)
        if len(drifts) == 1 and self.N > 1:
            drifts = drifts * self.N
        if len(drifts) != self.N:
            raise ParameterError(f"expected {self.N} drifts, got {len(drifts)}")
        object.__setattr__(self, "drifts", drifts)
        c = _coefficient_matrix(self.c, self.N, self.d)
        c.flags.writeable = False
        object.__setattr__(self, "c", c)

    @property
    def l(self) -> float:
        """Common dissipativity constant (smallest declared ``l``)."""
        return min(dr.l for dr in self.drifts)

    @property
    def max_step(self) -> float:
        """Explicit-Euler stability bound ``2 / (l + 4 lam)`` with the largest declared ``l``."""
        return 2.0 / (max(dr.l for dr in self.drifts) + 4.0 * self.lam)

    def with_grid(self, grid: TimeGrid) -> "SystemConfig":
        return replace(self, grid=grid)

    def rotated(self, k=1) -> "SystemConfig":
        """Labels shifted so that new component ``j`` is old component ``j - k``."""
        order = np.roll(np.arange(self.N), k)
        return replace(self, drifts=[self.drifts[i] for i in order], c=np.roll(self.c, k, axis=0))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a grid; ``states[i]`` is the right limit at ``times[i]``."""

    grid: TimeGrid
    states: np.ndarray  # (M+1, N, d)

    def __post_init__(self):
        if self.states.ndim != 3 or self.states.shape[0] != len(self.grid):
            raise ShapeError(f"states shape {self.states.shape} does not match grid of {len(self.grid)} nodes")

    @property
    def times(self):
        return self.grid.times

    @property
    def N(self):
        return self.states.shape[1]

    @property
    def d(self):
        return self.states.shape[2]

    def block(self, j) -> np.ndarray:
        return self.states[:, j, :]

    def at(self, t) -> np.ndarray:
        return self.states[self.grid.index_of(t)]

    def window(self, t_from, t_to) -> "Trajectory":
        sub = self.grid.window(t_from, t_to)
        return Trajectory(sub, self.states[self.grid.aligned_indices(sub)])

    def flat(self) -> np.ndarray:
        return self.states.reshape(len(self.grid), -1)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def ring_laplacian(x: np.ndarray) -> np.ndarray:
    """``x_{j-1} - 2 x_j + x_{j+1}`` along the block axis (second to last)."""
    return np.roll(x, 1, axis=-2) - 2.0 * x + np.roll(x, -1, axis=-2)


def _apply_drifts(drifts, u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    for j, dr in enumerate(drifts):
        out[..., j, :] = dr.evaluate(u[..., j, :])
    return out


def rode_rhs(config: SystemConfig, x, ou_states) -> np.ndarray:
    """Right-hand side of the coupled random ODE at one time.

    ``x`` and ``ou_states`` have shape ``(..., N, d)``.
    """
    x = np.asarray(x, dtype=float)
    ou_states = np.asarray(ou_states, dtype=float)
    if x.shape[-2:] != (config.N, config.d) or ou_states.shape[-2:] != (config.N, config.d):
        raise ShapeError(
            f"expected trailing shape {(config.N, config.d)}, got {x.shape} and {ou_states.shape}"
        )
    u = x + ou_states
    return _apply_drifts(config.drifts, u) + u + config.lam * ring_laplacian(x)


def sode_drift(config: SystemConfig, X, ou_states) -> np.ndarray:
    """Drift of the stochastic form at state ``X`` given the OU states."""
    return (
        _apply_drifts(config.drifts, X) + X - ou_states
        + config.lam * (ring_laplacian(X) - ring_laplacian(ou_states))
    )


def check_step(grid: TimeGrid, max_step):
    h = float(grid.cell_lengths.max())
    if not h < max_step:
        raise StepSizeError(f"step {h:.6g} violates the stability bound {max_step:.6g}")


def euler(rhs, x0, grid: TimeGrid, drive, increments=None) -> np.ndarray:
    """Explicit Euler ``x_{i+1} = x_i + h_i rhs(x_i, drive[i]) (+ increments[i])``.

    Returns the array of states on every node.  Raises
    :class:`DivergenceError` at the first node where the state is non-finite
    or exceeds ``1e12`` in magnitude.
    """
    times = grid.times
    h = np.diff(times)
    x = np.array(x0, dtype=float)
    out = np.empty((times.size,) + x.shape)
    out[0] = x
    for i in range(h.size):
        x = x + h[i] * rhs(x, drive[i])
        if increments is not None:
            x = x + increments[i]
        if not np.abs(x).max() <= BLOWUP:
            raise DivergenceError(times[i + 1])
        out[i + 1] = x
    return out


def stack_ou(ou: Sequence[OUTrajectory], grid: TimeGrid, n=None) -> np.ndarray:
    """OU states of all components on ``grid`` as an ``(M+1, N, d)`` array."""
    if n is not None and len(ou) != n:
        raise AlignmentError(f"expected {n} OU trajectories, got {len(ou)}")
    cols = []
    for tr in ou:
        try:
            idx = tr.grid.aligned_indices(grid)
        except ValueError as exc:
            raise AlignmentError(f"OU grid does not cover the integration grid: {exc}") from exc
        cols.append(tr.values[idx])
    return np.stack(cols, axis=1)


def ou_for_paths(config: SystemConfig, paths: Sequence[LevyPath], grid: TimeGrid = None) -> list:
    """Stationary OU trajectories ``Xbar_j`` on ``grid`` (default ``config.grid``)."""
    if len(paths) != config.N:
        raise AlignmentError(f"expected {config.N} paths, got {len(paths)}")
    grid = config.grid if grid is None else grid
    return [stationary_convolution(p, config.c[j], grid) for j, p in enumerate(paths)]


def _rode_states(config: SystemConfig, ou_values: np.ndarray, x0) -> np.ndarray:
    check_step(config.grid, config.max_step)
    return euler(lambda x, xb: rode_rhs(config, x, xb), x0, config.grid, ou_values)


def integrate_coupled_rode(config: SystemConfig, ou: Sequence[OUTrajectory], x0) -> Trajectory:
    """Euler solution of the coupled random ODE on ``config.grid``.

    Raises
    ------
    StepSizeError
        If the step is not below ``2 / (l + 4 lam)``.
    DivergenceError
        On blow-up.
    """
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (config.N, config.d))
    states = _rode_states(config, stack_ou(ou, config.grid, config.N), x0)
    return Trajectory(config.grid, states)


def path_increments(paths: Sequence[LevyPath], c: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """``c_j * dL_j`` over every cell of ``grid``, shape ``(M, N, d)``."""
    cols = []
    for p in paths:
        try:
            idx = p.grid.aligned_indices(grid)
        except ValueError as exc:
            raise AlignmentError(f"path grid does not cover the integration grid: {exc}") from exc
        cols.append(np.diff(p.values[idx], axis=0))
    dl = np.stack(cols, axis=1)  # (M, N, 1 or d)
    return c * dl


def integrate_coupled_sode(config: SystemConfig, paths: Sequence[LevyPath], X0, ou=None) -> Trajectory:
    """Euler-Maruyama solution of the coupled stochastic system.

    The drift is evaluated at the left node, which realises the left-limit
    convention for jump-driven equations; the noise enters through the cell
    increments ``c_j (L_j(tau_{i+1}) - L_j(tau_i))``.  ``paths`` must extend
    far enough left of ``config.grid`` for the stationary OU states unless
    ``ou`` is supplied.
    """
    if len(paths) != config.N:
        raise AlignmentError(f"expected {config.N} paths, got {len(paths)}")
    check_step(config.grid, config.max_step)
    if ou is None:
        ou = ou_for_paths(config, paths)
    ou_values = stack_ou(ou, config.grid, config.N)
    inc = path_increments(paths, config.c, config.grid)
    X0 = np.broadcast_to(np.asarray(X0, dtype=float), (config.N, config.d))
    states = euler(lambda X, xb: sode_drift(config, X, xb), X0, config.grid, ou_values, inc)
    return Trajectory(config.grid, states)


def transform_consistency(config: SystemConfig, paths: Sequence[LevyPath], x0) -> float:
    """``sup_t |X(t) - (x(t) + Xbar(t))|`` between the two integrators.

    The random ODE starts from ``x0`` and the stochastic form from
    ``x0 + Xbar(t_start)``; the discrepancy is first order in the step.
    """
    ou = ou_for_paths(config, paths)
    ou_values = stack_ou(ou, config.grid, config.N)
    x = integrate_coupled_rode(config, ou, x0)
    X = integrate_coupled_sode(config, paths, x.states[0] + ou_values[0], ou=ou)
    gap = X.states - (x.states + ou_values)
    return float(np.linalg.norm(gap.reshape(gap.shape[0], -1), axis=1).max())
