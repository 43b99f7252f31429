"""Synchronization metrics.

Two-solution decay
    ``xs(t)`` is the vector of per-component squared gaps
    ``|x_1^j(t) - x_2^j(t)|^2`` and the decay curve is ``log |xs(t)|^2``.
    The comparison envelope is ``|xs(0)|^2 e^{-2 l t}``.
Component spread
    ``sup_t max_{j,k} |x^j(t) - x^k(t)|`` over a window.
Skorohod distance
    A banded bottleneck dynamic program over monotone grid alignments gives
    a certified upper bound on the J1 distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .averaged import AveragedConfig, _states as _averaged_states
from .coupled_system import SystemConfig, Trajectory, _apply_drifts, _rode_states, stack_ou
from .errors import AlignmentError, ParameterError, ShapeError
from .levy_process import LevyPath, TimeGrid
from .ou_stationary import OUTrajectory, stationary_convolution

DECAY_SLACK = 0.15
UNDERFLOW = 1e-300
DEFAULT_BUDGET_STEPS = 10


def _fit_slope(t, y) -> float:
    return float(np.polyfit(t, y, 1)[0])


@dataclass
class DecayRecord:
    times: np.ndarray
    component_sq_gaps: np.ndarray  # (M+1, N)
    total: np.ndarray  # |xs(t)|^2
    fit_window: tuple
    slope: Optional[float]
    l: Optional[float]
    degenerate: bool = False
    truncated: bool = False

    @property
    def verdict(self) -> bool:
        """Decay at least ``(1 - 0.15)`` times the rate ``2 l``; degenerate runs pass."""
        if self.degenerate or self.l is None:
            return True
        return self.slope <= -2.0 * self.l * (1.0 - DECAY_SLACK)

    @property
    def faster_than_bound(self) -> bool:
        return not self.degenerate and self.l is not None and self.slope < -2.0 * self.l

    def envelope(self, slack=DECAY_SLACK) -> np.ndarray:
        """``|xs(t0)|^2 e^{-2 l (t - t0)} (1 + slack)``."""
        return self.total[0] * np.exp(-2.0 * self.l * (self.times - self.times[0])) * (1.0 + slack)

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "log_total": [float(np.log(v)) if v > 0 else None for v in self.total],
            "fit_window": list(self.fit_window),
            "slope": self.slope,
            "l": self.l,
            "verdict": bool(self.verdict),
            "degenerate": bool(self.degenerate),
            "truncated": bool(self.truncated),
            "faster_than_bound": bool(self.faster_than_bound),
        }


def pairwise_sync_curve(traj1: Trajectory, traj2: Trajectory, fit_window=None, l=None) -> DecayRecord:
    """Decay record of two solutions sharing one noise path.

    Parameters
    ----------
    fit_window : (float, float), optional
        Window for the least-squares slope of ``log |xs|^2``; defaults to
        the whole grid.  Nodes where ``|xs|^2`` drops below ``1e-300`` are
        cut from the fit and ``truncated`` is set.
    l : float, optional
        Dissipativity constant for the verdict.
    """
    if traj1.states.shape != traj2.states.shape or not np.array_equal(traj1.times, traj2.times):
        raise AlignmentError("trajectories must share a grid and block layout")
    diff = traj1.states - traj2.states
    comp = (diff ** 2).sum(axis=-1)
    total = (comp ** 2).sum(axis=-1)
    t = traj1.times
    lo, hi = (t[0], t[-1]) if fit_window is None else fit_window
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    keep = sel & (total > UNDERFLOW)
    truncated = bool((sel & ~keep).any())
    if keep.sum() < 2:
        return DecayRecord(t, comp, total, (float(lo), float(hi)), None, l, degenerate=True, truncated=truncated)
    if truncated:
        # the fit stops at the first underflow
        first_bad = np.flatnonzero(sel & ~keep)[0]
        keep &= np.arange(t.size) < first_bad
        if keep.sum() < 2:
            return DecayRecord(t, comp, total, (float(lo), float(hi)), None, l, degenerate=True, truncated=True)
        hi = float(t[keep][-1])
    slope = _fit_slope(t[keep], np.log(total[keep]))
    return DecayRecord(t, comp, total, (float(lo), float(hi)), slope, l, truncated=truncated)


def pair_distances(states: np.ndarray) -> np.ndarray:
    """``|x^j - x^k|`` for every node and pair, shape ``(M+1, N, N)``."""
    d = states[:, :, None, :] - states[:, None, :, :]
    return np.sqrt((d ** 2).sum(axis=-1))


def component_spread(traj: Trajectory, window=None):
    """Sup over the window of the largest pairwise block distance.

    Returns
    -------
    spread : float
    pairs : ndarray, shape (N, N)
        Sup over the window of each pairwise distance.
    """
    if window is not None:
        traj = traj.window(*window)
    pairs = pair_distances(traj.states).max(axis=0)
    return float(pairs.max()), pairs


@dataclass
class J1Result:
    distance: float
    uniform: float
    alignment: np.ndarray  # (K, 2) index pairs (i into b, j into a)
    budget_steps: int

    def to_dict(self) -> dict:
        return {
            "distance": float(self.distance),
            "uniform": float(self.uniform),
            "budget_steps": int(self.budget_steps),
            "alignment": self.alignment.tolist(),
        }


def j1_alignment(a: np.ndarray, b: np.ndarray, step, budget_steps=DEFAULT_BUDGET_STEPS) -> J1Result:
    """Bottleneck alignment of two sampled paths on a common regular grid.

    A monotone staircase from ``(0, 0)`` to ``(M, M)`` pairs node ``i`` of
    ``b`` with node ``j`` of ``a``, ``|j - i| <= budget_steps``.  Its cost is
    the largest ``max(|a_j - b_i|, |j - i| * step)`` along the staircase; the
    minimum cost is returned together with the minimizing staircase.
    """
    a = np.asarray(a, dtype=float).reshape(len(a), -1)
    b = np.asarray(b, dtype=float).reshape(len(b), -1)
    if a.shape != b.shape:
        raise ShapeError(f"paths differ in shape: {a.shape} vs {b.shape}")
    m = a.shape[0] - 1
    B = int(budget_steps)
    if B < 0:
        raise ParameterError("budget must be nonnegative")
    offsets = np.arange(-B, B + 1)
    i = np.arange(m + 1)[:, None]
    j = i + offsets[None, :]
    valid = (j >= 0) & (j <= m)
    jc = np.clip(j, 0, m)
    cost = np.sqrt(((a[jc] - b[i]) ** 2).sum(axis=-1))
    cost = np.maximum(cost, np.abs(offsets)[None, :] * step)
    cost[~valid] = np.inf

    n_off = offsets.size
    value = np.full((m + 1, n_off), np.inf)
    # 0: from (i-1, o), 1: from (i-1, o+1), 2: from (i, o-1)
    move = np.zeros((m + 1, n_off), dtype=np.int8)
    prev = np.full(n_off, np.inf)
    for row in range(m + 1):
        if row == 0:
            diag = np.full(n_off, np.inf)
            diag[B] = -np.inf  # the start (0, 0)
            up = np.full(n_off, np.inf)
        else:
            diag = prev
            up = np.append(prev[1:], np.inf)
        cand = np.minimum(diag, up)
        choice = np.where(up < diag, 1, 0)
        cur = np.empty(n_off)
        c = cost[row]
        left = np.inf
        for k in range(n_off):
            if left < cand[k]:
                best, mv = left, 2
            else:
                best, mv = cand[k], choice[k]
            cur[k] = max(c[k], best)
            move[row, k] = mv
            left = cur[k]
        value[row] = cur
        prev = cur

    path = [(m, m)]
    row, k = m, B
    while (row, k) != (0, B):
        mv = move[row, k]
        if mv == 0:
            row -= 1
        elif mv == 1:
            row, k = row - 1, k + 1
        else:
            k -= 1
        path.append((row, row + int(offsets[k])))
    uniform = float(np.sqrt(((a - b) ** 2).sum(axis=-1)).max())
    return J1Result(float(value[m, B]), uniform, np.array(path[::-1], dtype=int), B)


def skorohod_distance_j1(traj_a: Trajectory, traj_b: Trajectory, window=None, timechange_budget=None) -> J1Result:
    """Approximate J1 distance between two trajectories on a shared grid.

    ``timechange_budget`` is in time units and defaults to 10 grid steps.

    Raises
    ------
    ParameterError
        If the budget exceeds the window length.
    """
    if not np.array_equal(traj_a.times, traj_b.times):
        raise AlignmentError("trajectories must share a grid")
    if window is not None:
        traj_a, traj_b = traj_a.window(*window), traj_b.window(*window)
    grid = traj_a.grid
    length = grid.t_end - grid.t_start
    if timechange_budget is None:
        timechange_budget = min(DEFAULT_BUDGET_STEPS * grid.step, length)
    if timechange_budget > length:
        raise ParameterError(f"time-change budget {timechange_budget} exceeds window length {length}")
    steps = int(math.floor(timechange_budget / grid.step + 1e-9))
    return j1_alignment(traj_a.flat(), traj_b.flat(), grid.step, steps)


def drift_energy(drifts, ou_values: np.ndarray) -> np.ndarray:
    """``|f_j(Xbar_j)|^2 + |Xbar_j|^2`` per node and component, shape ``(M+1, N)``."""
    return (_apply_drifts(drifts, ou_values) ** 2).sum(axis=-1) + (ou_values ** 2).sum(axis=-1)


def sync_constants(drifts, ou_trajs: Sequence[OUTrajectory], window, alpha) -> np.ndarray:
    """``C[j, k] = (4 / alpha) sup_t [G_j(t) + G_k(t)]`` over the window.

    ``G_j = |f_j(Xbar_j)|^2 + |Xbar_j|^2``.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    grid = ou_trajs[0].grid.window(*window)
    ou_values = stack_ou(ou_trajs, grid)
    g = drift_energy(drifts, ou_values)
    return (4.0 / alpha) * (g[:, :, None] + g[:, None, :]).max(axis=0)


def sweep_refinement(lam, l, base_step=1e-3, safety=0.5) -> int:
    """Smallest ``k`` with ``base_step / k <= min(base_step, safety / (l + 4 lam))``."""
    target = min(base_step, safety / (l + 4.0 * lam))
    return max(1, int(math.ceil(base_step / target - 1e-9)))


def fine_step(lambdas, l, base_step=1e-3) -> float:
    """A step from which every sweep step is a whole multiple."""
    ks = [sweep_refinement(lam, l, base_step) for lam in lambdas]
    return base_step / (math.lcm(*ks) if ks else 1)


@dataclass
class SweepRow:
    lam: float
    step: float
    refined: bool
    spread: float
    spread_sq: float
    averaged_gap: float
    dj1: float
    uniform: float

    def to_dict(self) -> dict:
        return {
            "lambda": float(self.lam),
            "step": float(self.step),
            "refined": bool(self.refined),
            "spread": float(self.spread),
            "spread_sq": float(self.spread_sq),
            "averaged_gap": float(self.averaged_gap),
            "dj1": float(self.dj1),
            "uniform": float(self.uniform),
        }


@dataclass
class SweepResult:
    rows: List[SweepRow]
    window: tuple
    trimmed_window: tuple

    @property
    def lambdas(self):
        return [r.lam for r in self.rows]

    def top_decade_slope(self) -> Optional[float]:
        """Log-log slope of ``spread^2`` against lambda over ``[lam_max / 10, lam_max]``."""
        if len(self.rows) < 2:
            return None
        lam = np.array(self.lambdas)
        sel = lam >= lam.max() / 10.0 * (1 - 1e-12)
        if sel.sum() < 2:
            return None
        s2 = np.array([r.spread_sq for r in self.rows])[sel]
        if np.any(s2 <= 0):
            return None
        return _fit_slope(np.log(lam[sel]), np.log(s2))


def lambda_sweep(
    template: SystemConfig,
    lambdas: Sequence[float],
    window,
    paths: Sequence[LevyPath],
    x0=0.0,
    base_step=1e-3,
    budget_steps=DEFAULT_BUDGET_STEPS,
) -> SweepResult:
    """Coupling sweep on one pinned noise realization.

    For each lambda the coupled random ODE is integrated over ``window``
    from ``x0`` with step ``base_step / k`` (``k`` from
    :func:`sweep_refinement`) and metrics are taken after discarding
    ``[T1, T1 + 5 / l]``.  The averaged system is integrated from the block
    mean of ``x0`` on the same grid.  ``paths`` must live on a grid whose
    step divides every sweep step, see :func:`fine_step`.
    """
    lambdas = [float(v) for v in lambdas]
    if any(v <= 0 for v in lambdas):
        raise ParameterError("lambda values must be positive")
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ParameterError("lambda values must be increasing")
    t1, t2 = float(window[0]), float(window[1])
    l = template.l
    trim = (t1 + 5.0 / l, t2)
    if not trim[0] < t2:
        raise ParameterError(f"window [{t1}, {t2}] is shorter than the transient 5/l = {5.0 / l:.3g}")
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (template.N, template.d))
    avg_cfg = AveragedConfig.from_system(template)
    ou_cache = {}
    rows = []
    for lam in lambdas:
        k = sweep_refinement(lam, l, base_step)
        step = base_step / k
        if k not in ou_cache:
            ou_cache[k] = _sweep_ou(template, paths, t1, t2, step)
        grid, ou_values = ou_cache[k]
        cfg = SystemConfig(template.N, template.d, lam, template.drifts, template.c, grid, template.seed)
        traj = Trajectory(grid, _rode_states(cfg, ou_values, x0))
        z = _averaged_states(avg_cfg.with_grid(grid), ou_values, x0.mean(axis=0))
        zt = Trajectory(grid, np.repeat(z[:, None, :], template.N, axis=1))
        tw = traj.window(*_snap(grid, trim))
        zw = zt.window(*_snap(grid, trim))
        spread, _ = component_spread(tw)
        gap = float(np.sqrt(((tw.states - zw.states) ** 2).sum(axis=-1)).max())
        j1 = skorohod_distance_j1(tw, zw, timechange_budget=budget_steps * step)
        rows.append(SweepRow(lam, step, k > 1, spread, spread ** 2, gap, j1.distance, j1.uniform))
    return SweepResult(rows, (t1, t2), trim)


def _snap(grid: TimeGrid, window):
    """First node at or after ``window[0]`` and the grid end."""
    t = grid.times
    i = int(np.searchsorted(t, window[0] - 1e-9 * grid.step))
    return float(t[i]), float(grid.t_end)


def _sweep_ou(template: SystemConfig, paths, t1, t2, step):
    grid = TimeGrid(t1, t2, step)
    ou = []
    for j, p in enumerate(paths):
        coarse = p.restrict(TimeGrid(p.grid.t_start, p.grid.t_end, step)) if step != p.grid.step else p
        ou.append(stationary_convolution(coarse, template.c[j], grid))
    return grid, stack_ou(ou, grid, template.N)


@dataclass
class SyncReport:
    """Bundle of synchronization metrics for serialization."""

    decay_curve: Optional[DecayRecord] = None
    sweep: Optional[SweepResult] = None
    constants: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {}
        if self.decay_curve is not None:
            out["decay_curve"] = self.decay_curve.to_dict()
        if self.sweep is not None:
            out["spread_table"] = [
                {"lambda": r.lam, "spread": r.spread, "spread_sq": r.spread_sq} for r in self.sweep.rows
            ]
            out["averaged_gap"] = [{"lambda": r.lam, "gap": r.averaged_gap} for r in self.sweep.rows]
            out["skorohod_rows"] = [{"lambda": r.lam, "dj1": r.dj1, "uniform": r.uniform} for r in self.sweep.rows]
            out["sweep"] = [r.to_dict() for r in self.sweep.rows]
            out["spread_sq_slope"] = self.sweep.top_decade_slope()
        if self.constants is not None:
            out["constants"] = np.asarray(self.constants).tolist()
        out.update(self.extra)
        return out
