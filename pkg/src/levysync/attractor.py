"""Singleton pullback attractors of the coupled random ODE.

The attractor at time 0 for a pinned noise path is estimated by pullback:
the random ODE is integrated from a sequence of earlier and earlier start
times ``t0`` to 0 on the same path, from several initial states.  The
estimate is accepted when the endpoints no longer depend on the initial
state and form a Cauchy sequence in ``t0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import CouplingMatrixSpec, build_coupling_matrix
from .coupled_system import SystemConfig, _apply_drifts, _rode_states, ou_for_paths, stack_ou
from .errors import ParameterError
from .levy_process import LevyPath, TimeGrid, shift_path
from .linalg import expm

DEFAULT_HORIZONS = (-5.0, -10.0, -20.0)
DEFAULT_TOL = 1e-6


@dataclass
class AttractorEstimate:
    """Pullback estimate of the attractor point at time 0.

    ``point`` has shape ``(N, d)`` for the coupled system and ``(d,)`` for
    the averaged one.  ``cauchy_gaps[k]`` compares horizons ``k`` and
    ``k + 1``; ``initial_spread`` is measured at the deepest horizon.
    """

    point: np.ndarray
    pullback_horizons: list
    cauchy_gaps: list
    initial_spread: float
    radius: Optional[float] = None
    converged: bool = False
    seed: Optional[int] = None
    tol: float = DEFAULT_TOL
    diagnostics: list = field(default_factory=list)

    @property
    def scale(self) -> float:
        return 1.0 + float(np.linalg.norm(self.point))

    @property
    def contained(self) -> Optional[bool]:
        if self.radius is None:
            return None
        return bool(np.linalg.norm(self.point) <= self.radius)

    def to_dict(self) -> dict:
        return {
            "point": np.asarray(self.point).tolist(),
            "pullback_horizons": [float(t) for t in self.pullback_horizons],
            "cauchy_gaps": [float(g) for g in self.cauchy_gaps],
            "initial_spread": float(self.initial_spread),
            "radius": None if self.radius is None else float(self.radius),
            "point_norm": float(np.linalg.norm(self.point)),
            "converged": bool(self.converged),
            "seed": self.seed,
            "diagnostics": list(self.diagnostics),
        }


def _gaps_nonincreasing(gaps, floor) -> bool:
    # gaps at round-off level are treated as equal
    return all(b <= max(a, floor) for a, b in zip(gaps, gaps[1:]))


def pullback_estimate(
    endpoints: Callable[[float, np.ndarray], np.ndarray],
    t0_list: Sequence[float],
    x0_set: np.ndarray,
    tol=DEFAULT_TOL,
    seed=None,
) -> AttractorEstimate:
    """Generic pullback driver.

    ``endpoints(t0, x0_batch)`` returns the time-0 states reached from each
    initial state of the batch.
    """
    t0_list = [float(t) for t in t0_list]
    if len(t0_list) < 1 or any(t >= 0 for t in t0_list):
        raise ParameterError("pullback horizons must be negative")
    if any(b >= a for a, b in zip(t0_list, t0_list[1:])):
        raise ParameterError(f"pullback horizons must be strictly decreasing, got {t0_list}")
    x0_set = np.asarray(x0_set, dtype=float)
    if x0_set.shape[0] < 2:
        raise ParameterError("at least two initial states are needed")

    points = []
    last = None
    for t0 in t0_list:
        last = endpoints(t0, x0_set)
        points.append(last[0])
    flat = last.reshape(last.shape[0], -1)
    spread = float(max(np.linalg.norm(a - b) for i, a in enumerate(flat) for b in flat[i + 1:]))
    gaps = [float(np.linalg.norm(a - b)) for a, b in zip(points, points[1:])]
    point = points[-1]
    scale = 1.0 + float(np.linalg.norm(point))
    notes = []
    ok = spread < tol * scale
    if not ok:
        notes.append(f"initial states not contracted: spread {spread:.3g}")
    if gaps:
        if gaps[-1] >= tol * scale:
            ok = False
            notes.append(f"last Cauchy gap {gaps[-1]:.3g} above tolerance")
        if not _gaps_nonincreasing(gaps, 64 * np.finfo(float).eps * scale):
            ok = False
            notes.append("Cauchy gaps increase with the horizon")
    return AttractorEstimate(point, t0_list, gaps, spread, None, bool(ok), seed, tol, notes)


def _default_x0(shape, n=2) -> np.ndarray:
    # initial states at mutual distance 1
    x0 = np.zeros((n,) + tuple(shape))
    for k in range(1, n):
        x0[k].flat[0] = float(k)
    return x0


def _rode_endpoints(config: SystemConfig, ou_values: np.ndarray, full: TimeGrid):
    def run(t0, x0):
        grid = full.window(t0, 0.0)
        drive = ou_values[full.aligned_indices(grid)]
        states = _rode_states(config.with_grid(grid), drive, x0)
        return states[-1]

    return run


def pullback_fixed_point(
    config: SystemConfig,
    paths: Sequence[LevyPath],
    t0_list: Sequence[float] = DEFAULT_HORIZONS,
    x0_set=None,
    tol=DEFAULT_TOL,
    with_radius=True,
) -> AttractorEstimate:
    """Pullback estimate of the coupled random ODE attractor at time 0.

    Every start time uses the same noise paths; only ``config.grid.step``
    is taken from the configuration grid.

    Parameters
    ----------
    x0_set : array_like, optional
        Initial states, shape ``(K, N, d)`` with ``K >= 2``.  Defaults to
        zero and a unit perturbation of the first coordinate.
    """
    full = TimeGrid(min(t0_list), 0.0, config.grid.step)
    ou_values = stack_ou(ou_for_paths(config, paths, full), full, config.N)
    x0_set = _default_x0((config.N, config.d)) if x0_set is None else np.asarray(x0_set, dtype=float)
    est = pullback_estimate(_rode_endpoints(config, ou_values, full), t0_list, x0_set, tol, config.seed)
    if with_radius:
        est.radius = absorbing_radius(config, paths, min(t0_list), ou_values=ou_values)
        if not est.contained:
            est.diagnostics.append("attractor point outside the absorbing ball")
    return est


def absorbing_radius(config: SystemConfig, paths: Sequence[LevyPath], t0, ou_values=None) -> float:
    """Radius ``R = sqrt(1 + |rho|^2)`` of the absorbing ball, truncated at ``t0``.

    ``rho = int_{t0}^0 exp((0 - tau) D_tilde) g(tau) dtau`` with
    ``g_j = |f_j(Xbar_j)|^2 + |Xbar_j|^2``, evaluated as the left-point sum
    of the propagation ``P <- exp(h D_tilde) (P + h g)``.
    """
    grid = TimeGrid(float(t0), 0.0, config.grid.step)
    if ou_values is None:
        ou_values = stack_ou(ou_for_paths(config, paths, grid), grid, config.N)
    else:
        ou_values = ou_values[-len(grid):]
    g = (_apply_drifts(config.drifts, ou_values) ** 2).sum(axis=-1) + (ou_values ** 2).sum(axis=-1)
    if config.N >= 2:
        d_tilde = build_coupling_matrix(CouplingMatrixSpec("D_tilde", config.N, config.lam, l=config.l))
    else:
        d_tilde = np.array([[4.0 - 2.0 * config.l]])
    h = grid.cell_lengths
    prop = expm(h[0] * d_tilde)
    rho = np.zeros(config.N)
    for i in range(h.size):
        step = prop if np.isclose(h[i], h[0], rtol=1e-12, atol=0) else expm(h[i] * d_tilde)
        rho = step @ (rho + h[i] * g[i])
    return float(np.sqrt(1.0 + rho @ rho))


def stationary_orbit_residual(
    config: SystemConfig,
    paths: Sequence[LevyPath],
    anchors: Sequence[float] = (0.0, 1.0, 2.0),
    horizon=-20.0,
) -> float:
    """``max_t |phi(t, omega) X*(omega) - X*(theta_t omega)|`` over the anchors.

    ``X*(omega)`` is the pullback point from ``horizon``.  The left side
    integrates forward from 0 to ``t`` on ``omega``; the right side repeats
    the pullback on the shifted paths ``theta_t omega``.
    """
    if horizon >= 0:
        raise ParameterError("horizon must be negative")
    step = config.grid.step
    x0 = np.zeros((1, config.N, config.d))

    def pullback_point(ps):
        grid = TimeGrid(float(horizon), 0.0, step)
        ou_values = stack_ou(ou_for_paths(config, ps, grid), grid, config.N)
        return _rode_states(config.with_grid(grid), ou_values, x0)[-1, 0]

    base = pullback_point(paths)
    t_max = max(anchors)
    forward = None
    if t_max > 0:
        fgrid = TimeGrid(0.0, float(t_max), step)
        ou_values = stack_ou(ou_for_paths(config, paths, fgrid), fgrid, config.N)
        forward = _rode_states(config.with_grid(fgrid), ou_values, base)
    worst = 0.0
    for t in anchors:
        lhs = base if t == 0 else forward[fgrid.index_of(t)]
        rhs = pullback_point([shift_path(p, t) for p in paths])
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst
