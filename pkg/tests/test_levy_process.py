import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from levysync.errors import DomainError, EmptyGridError, OutOfSupportError, ParameterError
from levysync.levy_process import (
    LevyPath, LevySpec, TimeGrid, build_two_sided_path, exp_weighted_integral,
    sample_increments, shift_path, strong_law_ratio, truncation_bound,
)


def drift_path(gamma, t_start=-5.0, t_end=5.0, step=0.01):
    grid = TimeGrid(t_start, t_end, step)
    return LevyPath(LevySpec("brownian"), grid, gamma * grid.times[:, None])


class TestSpecAndGrid:
    @pytest.mark.parametrize("alpha", [1.0, 0.5, 2.01])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ParameterError):
            LevySpec("symmetric-alpha-stable", alpha=alpha)

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            LevySpec("gamma")

    def test_empty_grid(self):
        with pytest.raises(EmptyGridError):
            TimeGrid(1.0, 1.0, 0.1)

    def test_grid_contains_zero_exactly(self):
        g = TimeGrid(-0.3, 0.3, 0.1)
        assert 0.0 in g.times
        assert g.index_of(0.0) == 3

    def test_short_last_cell(self):
        g = TimeGrid(0.0, 0.25, 0.1)
        np.testing.assert_allclose(g.cell_lengths, [0.1, 0.1, 0.05])


class TestSampleIncrements:
    def test_zero_intensity_compound_poisson(self):
        inc = sample_increments(LevySpec("compound-poisson", intensity=0.0), TimeGrid(0, 10, 0.1), 3)
        assert np.all(inc.values == 0)
        assert inc.jump_times.size == 0

    def test_bitwise_reproducible(self):
        spec = LevySpec("symmetric-alpha-stable", alpha=1.5)
        g = TimeGrid(0, 1, 1e-3)
        a = sample_increments(spec, g, 11)
        b = sample_increments(spec, g, 11)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, sample_increments(spec, g, 12).values)

    def test_brownian_variance_chi_square(self):
        h = 1e-3
        n = 100_000
        inc = sample_increments(LevySpec("brownian", jump_scale=1.3), TimeGrid(0, n * h, h), 5).values[:, 0]
        assert inc.size == n
        # (n-1) s^2 / sigma^2 ~ chi2(n-1); 3 standard errors
        var = h * 1.3 ** 2
        stat = (n - 1) * inc.var(ddof=1) / var
        assert abs(stat - (n - 1)) < 3 * np.sqrt(2 * (n - 1))

    def test_alpha_two_is_gaussian_ks(self):
        # CMS convention: alpha = 2 gives N(0, 2 scale^2 h)
        n = 10_000
        inc = sample_increments(LevySpec("symmetric-alpha-stable", alpha=2.0), TimeGrid(0, n, 1.0), 9).values[:, 0]
        res = stats.kstest(inc, stats.norm(scale=np.sqrt(2.0)).cdf)
        assert res.statistic < 1.63 / np.sqrt(n)

    def test_increment_stationarity_two_sample_ks(self):
        spec = LevySpec("compound-poisson", intensity=3.0)
        g = TimeGrid(0, 20_000 * 0.5, 0.5)
        inc = sample_increments(spec, g, 21).values[:, 0]
        res = stats.ks_2samp(inc[::2], inc[1::2])
        assert res.pvalue > 0.01

    def test_compound_poisson_jump_records(self):
        spec = LevySpec("compound-poisson", intensity=4.0, jump_scale=2.0)
        inc = sample_increments(spec, TimeGrid(0, 50, 0.01), 4)
        assert inc.jump_times.size > 100
        assert np.isclose(inc.values.sum(), inc.jump_sizes.sum())
        assert np.all(np.diff(inc.jump_times) >= 0)


class TestTwoSidedPath:
    def test_anchor_and_zero_path(self):
        g = TimeGrid(-2, 2, 0.01)
        p = build_two_sided_path(LevySpec("brownian"), g, 1)
        assert np.array_equal(p.at(0.0), [0.0])
        z = build_two_sided_path(LevySpec("compound-poisson", intensity=0.0), g, 1)
        assert np.all(z.values == 0)

    def test_pure_drift(self):
        g = TimeGrid(-2, 2, 0.01)
        spec = LevySpec("compound-poisson", intensity=0.0, drift_gamma=1.0)
        p = build_two_sided_path(spec, g, 1)
        np.testing.assert_allclose(p.values[:, 0], g.times, atol=1e-12)

    def test_requires_straddle(self):
        with pytest.raises(DomainError):
            build_two_sided_path(LevySpec("brownian"), TimeGrid(0.5, 2, 0.01), 1)

    def test_backward_half_has_forward_law(self):
        g = TimeGrid(-2000, 2000, 1.0)
        p = build_two_sided_path(LevySpec("brownian"), g, 8)
        inc = p.increments[:, 0]
        i0 = g.index_of(0.0)
        res = stats.ks_2samp(inc[:i0], inc[i0:])
        assert res.pvalue > 0.01

    def test_halves_independent_substreams(self):
        g = TimeGrid(-1, 1, 0.001)
        p = build_two_sided_path(LevySpec("brownian"), g, 8)
        i0 = g.index_of(0.0)
        fwd = p.increments[i0:, 0]
        back = -p.increments[:i0, 0][::-1]
        assert not np.allclose(fwd, back)


class TestShift:
    def test_identity_shift(self):
        p = build_two_sided_path(LevySpec("brownian"), TimeGrid(-3, 3, 0.01), 2)
        s = shift_path(p, 0.0)
        assert np.array_equal(s.values, p.values)

    def test_flow_property(self):
        p = build_two_sided_path(LevySpec("compound-poisson", intensity=2.0), TimeGrid(-3, 3, 0.01), 2)
        a = shift_path(shift_path(p, 0.5), 0.7)
        b = shift_path(p, 1.2)
        np.testing.assert_allclose(a.values, b.values, atol=1e-13)
        assert a.at(0.0)[0] == 0.0

    def test_drift_shift_invariant(self):
        p = drift_path(0.7)
        s = shift_path(p, 1.0, window=(-2.0, 2.0))
        np.testing.assert_allclose(s.values[:, 0], 0.7 * s.times, atol=1e-12)

    def test_window_out_of_support(self):
        p = drift_path(1.0)
        with pytest.raises(OutOfSupportError):
            shift_path(p, 2.0, window=(0.0, 4.0))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(-100, 100), st.integers(-100, 100))
    def test_flow_property_random(self, i, j):
        p = build_two_sided_path(LevySpec("brownian"), TimeGrid(-3, 3, 0.01), 5)
        s, t = i * 0.01, j * 0.01
        a = shift_path(shift_path(p, s), t)
        b = shift_path(p, s + t)
        common = (max(a.grid.t_start, b.grid.t_start) + 0.02, min(a.grid.t_end, b.grid.t_end) - 0.02)
        np.testing.assert_allclose(a.window(*common).values, b.window(*common).values, atol=1e-12)


class TestWeightedIntegral:
    def test_zero_path(self):
        g = TimeGrid(-40, 1, 0.01)
        p = build_two_sided_path(LevySpec("compound-poisson", intensity=0.0), g, 0)
        assert exp_weighted_integral(p, 2.0, 1.0).value[0] == 0.0

    def test_drift_closed_form(self):
        gamma, delta, t1, t = 1.5, 3.0, -1.0, 1.0
        for step in (0.01, 0.005):
            p = drift_path(gamma, step=step)
            v = exp_weighted_integral(p, delta, t, lower=t1).value[0]
            exact = gamma * (1 - np.exp(-delta * (t - t1))) / delta
            # left-point sum: first-order error
            assert abs(v - exact) < 2 * delta * gamma * step

    def test_delta_decay_on_pinned_path(self):
        p = build_two_sided_path(LevySpec("brownian"), TimeGrid(-40, 1, 1e-4), 8001)
        vals = [abs(exp_weighted_integral(p, d, 1.0).value[0]) for d in (1.0, 10.0, 100.0)]
        assert vals[0] > vals[1] > vals[2]

    def test_truncation_reported(self):
        p = build_two_sided_path(LevySpec("brownian"), TimeGrid(-40, 1, 1e-3), 3)
        w = exp_weighted_integral(p, 1.0, 1.0)
        assert 0 < w.truncation_error < 1e-8
        assert w.truncation_error == pytest.approx(
            truncation_bound(p.envelope(), 1.0, 1.0, w.lower))

    def test_errors(self):
        p = drift_path(1.0)
        with pytest.raises(ParameterError):
            exp_weighted_integral(p, 0.0, 1.0)
        with pytest.raises(OutOfSupportError):
            exp_weighted_integral(p, 0.1, 1.0)
        with pytest.raises(DomainError):
            exp_weighted_integral(p, 1.0, 1.0, lower=2.0)


class TestStrongLaw:
    def test_pure_drift_exact(self):
        assert strong_law_ratio(drift_path(0.25), 4.0) == pytest.approx(0.25, abs=1e-14)

    def test_zero_time(self):
        with pytest.raises(DomainError):
            strong_law_ratio(drift_path(1.0), 0.0)

    def test_brownian_tail(self):
        T = 1e4
        p = build_two_sided_path(LevySpec("brownian"), TimeGrid(-1, T, 0.5), 77)
        assert abs(strong_law_ratio(p, T)) < 4.0 / np.sqrt(T)

    def test_compound_poisson_ratio_shrinks(self):
        spec = LevySpec("compound-poisson", intensity=2.0)
        for seed in (1, 2, 3):
            p = build_two_sided_path(spec, TimeGrid(-1, 1e4, 1.0), seed)
            # CLT width sqrt(intensity) / sqrt(T), with four standard errors
            assert abs(strong_law_ratio(p, 1e4)) < 4 * np.sqrt(2.0 / 1e4)
