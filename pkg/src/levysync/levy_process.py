"""Two-sided Levy sample paths, the shift map and pathwise weighted integrals.

Three families are supported: compound Poisson with symmetric Gaussian
marks, symmetric alpha-stable (Chambers-Mallows-Stuck) and Brownian motion.
Every family carries an additive linear drift ``drift_gamma`` so that
``E L_1 = drift_gamma`` whenever the mean exists.

Random streams
--------------
A master seed is split with :class:`numpy.random.SeedSequence` using the
spawn key ``(component, sign)``, where ``sign`` is 0 for the forward
(t > 0) half and 1 for the backward half.  Each substream drives a
counter-based :class:`numpy.random.Philox` generator, so component ``j``
of a system never shares draws with component ``k`` and the two halves of
a two-sided path are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, EmptyGridError, OutOfSupportError, ParameterError

KINDS = ("compound-poisson", "symmetric-alpha-stable", "brownian")

FORWARD = 0
BACKWARD = 1

# e^{-delta (t - T_left)} below this when truncating integrals from -infinity
TRUNCATION_FACTOR = 1e-12


@dataclass(frozen=True)
class LevySpec:
    """Law of a Levy process.

    Parameters
    ----------
    kind : str
        One of ``"compound-poisson"``, ``"symmetric-alpha-stable"``,
        ``"brownian"``.
    intensity : float
        Jump rate per unit time (compound Poisson only).
    jump_scale : float
        Scale of the random part: jump mark standard deviation, stable scale,
        or Brownian volatility.
    alpha : float
        Stability index in (1, 2] (alpha-stable only).  With the CMS
        convention used here, ``alpha = 2`` gives variance
        ``2 * jump_scale**2`` per unit time.
    drift_gamma : float
        Deterministic slope added to every increment.
    dimension : int
        Number of independent coordinates.
    """

    kind: str = "brownian"
    intensity: float = 0.0
    jump_scale: float = 1.0
    alpha: float = 2.0
    drift_gamma: float = 0.0
    dimension: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown Levy kind {self.kind!r}; expected one of {KINDS}")
        if not self.intensity >= 0:
            raise ParameterError(f"intensity must be >= 0, got {self.intensity}")
        if not self.jump_scale > 0:
            raise ParameterError(f"jump_scale must be > 0, got {self.jump_scale}")
        if self.kind == "symmetric-alpha-stable" and not 1.0 < self.alpha <= 2.0:
            raise ParameterError(f"alpha must lie in (1, 2], got {self.alpha}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.dimension}")

    @property
    def mean_slope(self):
        """``E L_1``; the jump and stable parts are symmetric."""
        return self.drift_gamma


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_start = tau_0 < ... < tau_M = t_end``.

    All cells have length ``step`` except possibly the last one, which is
    shortened to land on ``t_end``.  A node within ``1e-9 * step`` of zero is
    snapped to exactly 0.0.
    """

    t_start: float
    t_end: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ParameterError(f"step must be > 0, got {self.step}")
        if not self.t_end > self.t_start:
            raise EmptyGridError(f"empty grid [{self.t_start}, {self.t_end}]")

    @cached_property
    def n_cells(self) -> int:
        return max(1, math.ceil((self.t_end - self.t_start) / self.step - 1e-9))

    @cached_property
    def times(self) -> np.ndarray:
        m = self.n_cells
        t = self.t_start + np.arange(m + 1) * self.step
        t[-1] = self.t_end
        t[np.abs(t) < 1e-9 * self.step] = 0.0
        t.flags.writeable = False
        return t

    @property
    def cell_lengths(self) -> np.ndarray:
        return np.diff(self.times)

    def __len__(self):
        return self.n_cells + 1

    def contains(self, t) -> bool:
        return self.t_start - 1e-9 * self.step <= t <= self.t_end + 1e-9 * self.step

    def index_of(self, t) -> int:
        """Index of the node at time ``t``.

        Raises
        ------
        OutOfSupportError
            If ``t`` lies outside the grid.
        DomainError
            If ``t`` is inside the grid but not (within round-off) a node.
        """
        if not self.contains(t):
            raise OutOfSupportError(f"t={t} outside [{self.t_start}, {self.t_end}]")
        times = self.times
        i = int(round((t - self.t_start) / self.step))
        i = min(max(i, 0), self.n_cells)
        for k in (i, i - 1, i + 1):
            if 0 <= k <= self.n_cells and abs(times[k] - t) <= 1e-9 * self.step:
                return k
        raise DomainError(f"t={t} is not a node of the grid")

    def indices_of(self, ts) -> np.ndarray:
        return np.array([self.index_of(t) for t in np.asarray(ts, dtype=float)], dtype=int)

    def window(self, t_from, t_to) -> "TimeGrid":
        """Sub-grid between two nodes."""
        i0, i1 = self.index_of(t_from), self.index_of(t_to)
        if i1 <= i0:
            raise EmptyGridError(f"empty window [{t_from}, {t_to}]")
        return TimeGrid(float(self.times[i0]), float(self.times[i1]), self.step)

    def aligned_indices(self, other: "TimeGrid") -> np.ndarray:
        """Indices in ``self`` of every node of ``other``.

        Raises if some node of ``other`` is not a node of ``self``.
        """
        ts = other.times
        if not (self.contains(ts[0]) and self.contains(ts[-1])):
            raise OutOfSupportError(
                f"window [{ts[0]}, {ts[-1]}] exceeds support [{self.t_start}, {self.t_end}]"
            )
        raw = np.rint((ts - self.t_start) / self.step).astype(int)
        raw = np.clip(raw, 0, self.n_cells)
        ok = np.abs(self.times[raw] - ts) <= 1e-9 * self.step
        if not ok.all():
            # the last node of either grid may be off the regular lattice
            for k in np.flatnonzero(~ok):
                raw[k] = self.index_of(ts[k])
        return raw

    def two_sided(self) -> bool:
        return self.t_start < 0 < self.t_end


class Increments(NamedTuple):
    """Per-cell increments and, for compound Poisson, the jump records."""

    values: np.ndarray  # (M, d)
    jump_times: np.ndarray  # (K,)
    jump_sizes: np.ndarray  # (K, d)


def substream(seed, component=0, sign=FORWARD) -> np.random.Generator:
    """Generator for one (component, sign) substream of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(component), int(sign)))
    return np.random.Generator(np.random.Philox(ss))


def _draw(spec: LevySpec, lengths: np.ndarray, rng: np.random.Generator):
    """Increments over cells of the given lengths plus in-cell jump offsets.

    Jump offsets are returned as (cell index, fraction of the cell, size).
    """
    m, d = lengths.size, spec.dimension
    inc = spec.drift_gamma * np.repeat(lengths[:, None], d, axis=1)
    cells = np.empty(0, dtype=int)
    fracs = np.empty(0)
    sizes = np.empty((0, d))
    if spec.kind == "brownian":
        inc += spec.jump_scale * np.sqrt(lengths)[:, None] * rng.standard_normal((m, d))
    elif spec.kind == "symmetric-alpha-stable":
        a = spec.alpha
        v = rng.uniform(-np.pi / 2, np.pi / 2, size=(m, d))
        w = rng.standard_exponential(size=(m, d))
        x = np.sin(a * v) / np.cos(v) ** (1.0 / a) * (np.cos((1.0 - a) * v) / w) ** ((1.0 - a) / a)
        inc += spec.jump_scale * lengths[:, None] ** (1.0 / a) * x
    else:
        counts = rng.poisson(spec.intensity * lengths)
        k = int(counts.sum())
        if k:
            cells = np.repeat(np.arange(m), counts)
            fracs = rng.uniform(size=k)
            sizes = spec.jump_scale * rng.standard_normal((k, d))
            order = np.lexsort((fracs, cells))
            cells, fracs, sizes = cells[order], fracs[order], sizes[order]
            np.add.at(inc, cells, sizes)
    return inc, cells, fracs, sizes


def sample_increments(spec: LevySpec, grid: TimeGrid, seed, stream: Tuple[int, int] = (0, FORWARD)) -> Increments:
    """Independent increments of ``spec`` over every cell of ``grid``.

    Identical ``(spec, grid, seed, stream)`` reproduce the output bit for bit.
    """
    lengths = grid.cell_lengths
    if lengths.size == 0:
        raise EmptyGridError("grid has no cells")
    inc, cells, fracs, sizes = _draw(spec, lengths, substream(seed, *stream))
    times = grid.times[cells] + fracs * lengths[cells] if cells.size else np.empty(0)
    return Increments(inc, times, sizes)


@dataclass(frozen=True, eq=False)
class LevyPath:
    """A stored two-sided (or one-sided) Levy path.

    ``values[i]`` is the right limit ``L(tau_i+)``; between nodes the path is
    represented by its increments only.
    """

    spec: LevySpec
    grid: TimeGrid
    values: np.ndarray
    seed: Optional[int] = None
    component: int = 0
    jump_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    jump_sizes: np.ndarray = field(default_factory=lambda: np.empty((0, 1)))

    def __post_init__(self):
        for name in ("values", "jump_times", "jump_sizes"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.values.shape != (len(self.grid), self.spec.dimension):
            raise ParameterError(
                f"values shape {self.values.shape} != {(len(self.grid), self.spec.dimension)}"
            )

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @property
    def jumps(self):
        """List of ``(time, size)`` records."""
        return [(float(t), s.copy()) for t, s in zip(self.jump_times, self.jump_sizes)]

    @property
    def ref(self) -> str:
        return f"{self.spec.kind}:seed={self.seed}:component={self.component}"

    def at(self, t) -> np.ndarray:
        return self.values[self.grid.index_of(t)]

    def restrict(self, grid: TimeGrid) -> "LevyPath":
        """The same path seen on a coarser or shorter grid whose nodes are nodes of ours."""
        idx = self.grid.aligned_indices(grid)
        keep = (self.jump_times > grid.t_start) & (self.jump_times <= grid.t_end)
        return LevyPath(
            self.spec, grid, self.values[idx], self.seed, self.component,
            self.jump_times[keep], self.jump_sizes[keep],
        )

    def window(self, t_from, t_to) -> "LevyPath":
        return self.restrict(self.grid.window(t_from, t_to))

    def envelope(self) -> float:
        """Empirical linear-growth constant ``K`` with ``|L(s)| <= K (1 + |s|)`` on the support."""
        norms = np.linalg.norm(self.values, axis=1)
        return float(np.max(norms / (1.0 + np.abs(self.times))))


def build_two_sided_path(spec: LevySpec, grid: TimeGrid, seed, component=0) -> LevyPath:
    """Two-sided path anchored at ``L(0) = 0``.

    The forward half accumulates increments drawn from substream
    ``(component, 0)``.  The backward half is an independent one-sided path
    ``B`` from substream ``(component, 1)`` mirrored as ``L(-s) = -B(s)``, so
    ``L(0) - L(-s)`` has the law of ``L_s``.

    Raises
    ------
    DomainError
        If the grid does not straddle zero or zero is not a node.
    """
    if not grid.two_sided():
        raise DomainError(f"grid [{grid.t_start}, {grid.t_end}] does not straddle 0")
    times = grid.times
    i0 = grid.index_of(0.0)
    d = spec.dimension
    values = np.zeros((len(grid), d))

    fwd_len = np.diff(times[i0:])
    inc, cells, fracs, sizes = _draw(spec, fwd_len, substream(seed, component, FORWARD))
    values[i0 + 1:] = np.cumsum(inc, axis=0)
    fwd_jt = times[i0:][cells] + fracs * fwd_len[cells] if cells.size else np.empty(0)

    back_times = -times[: i0 + 1][::-1]  # 0 = s_0 < s_1 < ...
    back_len = np.diff(back_times)
    binc, bcells, bfracs, bsizes = _draw(spec, back_len, substream(seed, component, BACKWARD))
    values[:i0][::-1] = -np.cumsum(binc, axis=0)
    back_jt = -(back_times[bcells] + bfracs * back_len[bcells]) if bcells.size else np.empty(0)

    jt = np.concatenate([back_jt[::-1], fwd_jt])
    js = np.concatenate([bsizes[::-1].reshape(-1, d), sizes.reshape(-1, d)])
    return LevyPath(spec, grid, values, seed, component, jt, js)


def build_noise_paths(spec: LevySpec, grid: TimeGrid, seed, n_components) -> list:
    """Independent two-sided scalar paths, one per system component."""
    return [build_two_sided_path(spec, grid, seed, component=j) for j in range(n_components)]


def shift_path(path: LevyPath, t, window: Optional[Sequence[float]] = None) -> LevyPath:
    """The shifted path ``(theta_t omega)(s) = omega(t + s) - omega(t)``.

    Parameters
    ----------
    path : LevyPath
    t : float
        A node of ``path.grid``.
    window : (float, float), optional
        Restrict the output to ``s`` in this window.

    Raises
    ------
    OutOfSupportError
        If ``t`` or the requested window is not covered by the stored path.
    """
    i_t = path.grid.index_of(t)
    t = float(path.times[i_t])
    grid = TimeGrid(path.grid.t_start - t, path.grid.t_end - t, path.grid.step)
    values = path.values - path.values[i_t]
    shifted = LevyPath(
        path.spec, grid, values, path.seed, path.component,
        path.jump_times - t, path.jump_sizes,
    )
    if window is not None:
        s0, s1 = window
        if not (grid.contains(s0) and grid.contains(s1)):
            raise OutOfSupportError(
                f"window [{s0}, {s1}] exceeds shifted support [{grid.t_start}, {grid.t_end}]"
            )
        shifted = shifted.window(s0, s1)
    return shifted


class WeightedIntegral(NamedTuple):
    value: np.ndarray
    truncation_error: float
    lower: float


def truncation_bound(envelope, delta, t, t_left) -> float:
    """Bound on ``|int_{-inf}^{t_left} e^{-delta (t - s)} dL_s|``.

    Integrating by parts with ``|L(s)| <= K (1 + |s|)`` for ``s <= t_left``
    gives ``e^{-delta (t - t_left)} K (2 (1 + |t_left|) + 1 / delta)``.
    """
    return float(math.exp(-delta * (t - t_left)) * envelope * (2.0 * (1.0 + abs(t_left)) + 1.0 / delta))


def exp_weighted_integral(path: LevyPath, delta, t, lower=None) -> WeightedIntegral:
    """Left-point Riemann-Stieltjes sum of ``int_lower^t e^{-delta (t - s)} dL_s``.

    ``lower=None`` means minus infinity: the sum is truncated at the latest
    node ``T_left`` with ``e^{-delta (t - T_left)} < 1e-12`` and the bound of
    :func:`truncation_bound` is reported.  A finite ``lower`` reports a zero
    truncation error.
    """
    if not delta > 0:
        raise ParameterError(f"delta must be > 0, got {delta}")
    grid = path.grid
    it = grid.index_of(t)
    t = float(grid.times[it])
    if lower is None:
        need = t + math.log(TRUNCATION_FACTOR) / delta
        if need < grid.t_start - 1e-9 * grid.step:
            raise OutOfSupportError(
                f"delta={delta} needs support back to {need:.6g}, path starts at {grid.t_start}"
            )
        il = int(np.searchsorted(grid.times, need, side="right")) - 1
        il = max(il, 0)
        t_left = float(grid.times[il])
        bound = truncation_bound(path.envelope(), delta, t, t_left)
    else:
        il = grid.index_of(lower)
        if il >= it:
            raise DomainError(f"lower={lower} must be < t={t}")
        t_left = float(grid.times[il])
        bound = 0.0
    left = grid.times[il:it]
    weights = np.exp(-delta * (t - left))
    value = weights @ (path.values[il + 1: it + 1] - path.values[il:it])
    return WeightedIntegral(value, bound, t_left)


def strong_law_ratio(path: LevyPath, T):
    """``L(T) / T``; a float for scalar paths, an array otherwise."""
    if T == 0:
        raise DomainError("strong_law_ratio is undefined at T = 0")
    ratio = path.at(T) / float(T)
    return float(ratio[0]) if ratio.size == 1 else ratio
