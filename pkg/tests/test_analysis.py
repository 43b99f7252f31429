import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levysync.analysis import (
    component_spread, fine_step, j1_alignment, lambda_sweep, pairwise_sync_curve, skorohod_distance_j1,
    sweep_refinement, sync_constants,
)
from levysync.coupled_system import SystemConfig, Trajectory, integrate_coupled_rode, ou_for_paths
from levysync.drifts import cubic_drift, linear_drift, sine_drift
from levysync.errors import ParameterError
from levysync.levy_process import TimeGrid

from conftest import brownian_paths, zero_paths

GRID = TimeGrid(0, 2, 1e-3)
MIX = [linear_drift(6), cubic_drift(6), sine_drift(7)]


def traj_from(values, grid):
    values = np.asarray(values, dtype=float)
    return Trajectory(grid, values.reshape(len(grid), -1, 1) if values.ndim < 3 else values)


def two_solutions(drifts, paths, lam=1.0):
    cfg = SystemConfig(3, 1, lam, drifts, 1.0, GRID)
    ou = ou_for_paths(cfg, paths)
    x0 = np.zeros((3, 1))
    x1 = x0.copy()
    x1[0, 0] = 1.0
    return integrate_coupled_rode(cfg, ou, x0), integrate_coupled_rode(cfg, ou, x1)


class TestDecay:
    def test_identical_is_degenerate(self):
        a, _ = two_solutions(MIX, zero_paths(3))
        rec = pairwise_sync_curve(a, a, l=6.0)
        assert rec.degenerate and rec.verdict and rec.slope is None

    def test_linear_spectral_rate(self):
        # slowest mode of the gap has rate 2 - 2l per squared gap, doubled for |xs|^2 = sum gap^4
        a, b = two_solutions([linear_drift(6)], zero_paths(3))
        rec = pairwise_sync_curve(a, b, fit_window=(0.5, 2.0), l=6.0)
        # oracle: the Euler gap is (I + h A)^n e_0 with A = -5 I + ring Laplacian
        h = GRID.step
        A = -5.0 * np.eye(3) + np.array([[-2, 1, 1], [1, -2, 1], [1, 1, -2]], dtype=float)
        step = np.eye(3) + h * A
        y = np.empty((len(GRID), 3))
        y[0] = [-1.0, 0.0, 0.0]
        for i in range(1, len(GRID)):
            y[i] = step @ y[i - 1]
        np.testing.assert_allclose(rec.total, (y ** 4).sum(axis=1), rtol=1e-10)
        sel = (GRID.times >= 0.5) & (GRID.times <= 2.0)
        oracle = np.polyfit(GRID.times[sel], np.log((y[sel] ** 4).sum(axis=1)), 1)[0]
        assert rec.slope == pytest.approx(oracle, rel=1e-8)
        # transient modes decay at -8, so the fit sits slightly below the asymptotic 2 (2 - 2l) = -20
        assert rec.slope == pytest.approx(2 * (2 - 2 * 6), rel=0.02)
        assert rec.verdict and rec.faster_than_bound

    def test_linear_gap_noise_free(self):
        curves = []
        for seed in (1, 2):
            a, b = two_solutions([linear_drift(6)], brownian_paths(seed, 3))
            curves.append(pairwise_sync_curve(a, b, l=6.0).total)
        np.testing.assert_allclose(curves[0], curves[1], rtol=1e-9, atol=1e-300)

    def test_underflow_truncates_fit(self):
        g = TimeGrid(0, 10, 0.01)
        a = traj_from(np.zeros(len(g)), g)
        b = traj_from(np.exp(-100 * g.times), g)
        rec = pairwise_sync_curve(a, b, l=5.0)
        assert rec.truncated
        assert rec.fit_window[1] < 10
        assert rec.slope == pytest.approx(-400, rel=1e-6)


class TestSpread:
    def test_equal_blocks(self):
        g = TimeGrid(0, 1, 0.1)
        assert component_spread(traj_from(np.ones((len(g), 3)), g))[0] == 0.0

    def test_hand_value(self):
        g = TimeGrid(0, 1, 0.1)
        t = traj_from(np.tile([1.0, -1.0], (len(g), 1)), g)
        spread, pairs = component_spread(t)
        assert spread == 2.0
        np.testing.assert_array_equal(pairs, [[0, 2], [2, 0]])

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-50, 50), st.integers(0, 2 ** 32 - 1))
    def test_translation_invariant(self, shift, seed):
        g = TimeGrid(0, 1, 0.1)
        x = np.random.default_rng(seed).normal(size=(len(g), 3, 2))
        a = component_spread(Trajectory(g, x))[0]
        b = component_spread(Trajectory(g, x + shift))[0]
        assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


class TestSkorohod:
    def test_identical(self):
        g = TimeGrid(0, 1, 0.01)
        x = traj_from(np.sin(g.times), g)
        r = skorohod_distance_j1(x, x)
        assert r.distance == 0.0
        assert np.all(r.alignment[:, 0] == r.alignment[:, 1])

    def test_shifted_step(self):
        g = TimeGrid(0, 1, 0.01)
        a = traj_from((g.times >= 0.30 - 1e-12).astype(float), g)
        b = traj_from((g.times >= 0.31 - 1e-12).astype(float), g)
        r = skorohod_distance_j1(a, b, window=(0.0, 1.0))
        assert r.uniform == 1.0
        assert r.distance <= 0.01 + 1e-12

    def test_budget_too_large(self):
        g = TimeGrid(0, 1, 0.01)
        x = traj_from(g.times, g)
        with pytest.raises(ParameterError):
            skorohod_distance_j1(x, x, timechange_budget=2.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(0, 6))
    def test_symmetric_and_below_uniform(self, seed, budget):
        rng = np.random.default_rng(seed)
        a, b = np.cumsum(rng.normal(size=(2, 40)), axis=1)
        ab = j1_alignment(a, b, 0.1, budget)
        ba = j1_alignment(b, a, 0.1, budget)
        assert ab.distance == pytest.approx(ba.distance, abs=1e-12)
        assert ab.distance <= ab.uniform + 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_triangle_within_resolution(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = np.cumsum(rng.normal(size=(3, 40)), axis=1)
        d = lambda x, y: j1_alignment(x, y, 0.1, 3).distance
        # composing two budget-3 time changes can need budget 6
        assert j1_alignment(a, c, 0.1, 6).distance <= d(a, b) + d(b, c) + 1e-12


class TestConstants:
    def test_zero_noise(self):
        cfg = SystemConfig(3, 1, 1.0, MIX, 1.0, GRID)
        ou = ou_for_paths(cfg, zero_paths(3))
        assert np.all(sync_constants(MIX, ou, (0.5, 2.0), 1.0) == 0)

    def test_alpha_homogeneity_and_determinism(self):
        cfg = SystemConfig(3, 1, 1.0, MIX, 1.0, GRID)
        ou = ou_for_paths(cfg, brownian_paths(3, 3))
        c1 = sync_constants(MIX, ou, (0.5, 2.0), 1.0)
        c2 = sync_constants(MIX, ou, (0.5, 2.0), 2.0)
        np.testing.assert_array_equal(c2 * 2, c1)
        assert np.array_equal(c1, sync_constants(MIX, ou_for_paths(cfg, brownian_paths(3, 3)), (0.5, 2.0), 1.0))
        assert np.all(c1 > 0) and np.array_equal(c1, c1.T)


class TestSweep:
    def test_refinement(self):
        assert sweep_refinement(10, 5) == 1
        assert sweep_refinement(1000, 5) == 9
        assert fine_step([10, 100, 1000], 5) == pytest.approx(1e-3 / 9)

    def test_symmetric_setup_has_zero_spread(self):
        template = SystemConfig(3, 1, 1.0, [cubic_drift(6)], 1.0, GRID)
        p = brownian_paths(3, 1, step=fine_step([10, 100], 6))[0]
        res = lambda_sweep(template, [10, 100], (0.5, 2.0), [p, p, p], x0=0.3)
        assert all(r.spread == 0.0 for r in res.rows)

    def test_heterogeneous_sweep(self):
        template = SystemConfig(3, 1, 1.0, MIX, 1.0, GRID)
        lams = [10.0, 100.0, 1000.0]
        paths = brownian_paths(3003, 3, step=fine_step(lams, 6))
        res = lambda_sweep(template, lams, (0.5, 2.0), paths)
        spread = [r.spread for r in res.rows]
        gaps = [r.averaged_gap for r in res.rows]
        assert spread[0] > spread[1] > spread[2]
        assert spread[2] < spread[0] / 5
        assert gaps[0] > gaps[1] > gaps[2]
        assert res.rows[2].refined and not res.rows[0].refined

    def test_spread_squared_scales_like_inverse_lambda_squared(self):
        # the component gap obeys u' <= H u + C / lambda with H = O(lambda), so the
        # steady spread is O(1 / lambda) and spread^2 falls with slope about -2
        template = SystemConfig(3, 1, 1.0, MIX, 1.0, GRID)
        lams = [100.0, 300.0, 1000.0]
        paths = brownian_paths(3003, 3, step=fine_step(lams, 6))
        slope = lambda_sweep(template, lams, (0.5, 2.0), paths).top_decade_slope()
        assert -2.2 < slope < -1.8

    def test_invalid_lambdas(self):
        template = SystemConfig(3, 1, 1.0, MIX, 1.0, GRID)
        with pytest.raises(ParameterError):
            lambda_sweep(template, [100.0, 10.0], (0.5, 2.0), zero_paths(3))
