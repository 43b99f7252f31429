import numpy as np
import pytest

from levysync.attractor import absorbing_radius, pullback_estimate, pullback_fixed_point, stationary_orbit_residual
from levysync.coupled_system import SystemConfig
from levysync.drifts import cubic_drift, linear_drift, sine_drift
from levysync.errors import ParameterError
from levysync.levy_process import TimeGrid

from conftest import brownian_paths, zero_paths

MIX = [linear_drift(7), cubic_drift(6), sine_drift(7)]


def config(drifts=MIX, lam=1.0, step=1e-3):
    return SystemConfig(3, 1, lam, drifts, 1.0, TimeGrid(0, 1, step), seed=5005)


def test_zero_noise_linear_point_is_zero():
    cfg = config(drifts=[linear_drift(6)])
    paths = zero_paths(3)
    x0 = np.stack([np.zeros((3, 1)), np.ones((3, 1))])
    est = pullback_fixed_point(cfg, paths, [-5.0, -10.0], x0)
    assert np.all(est.point == 0)
    assert est.radius == 1.0
    # endpoint from x0 = 1 decays like (1 - 5h)^{n} ~ e^{-5 |t0|}
    run = est.initial_spread
    assert run == pytest.approx(np.sqrt(3) * (1 - 5e-3) ** 10_000, rel=1e-9)


def test_two_initial_conditions_collapse():
    cfg = config(drifts=[linear_drift(6)] * 3)
    paths = brownian_paths(11, 3)
    est = pullback_fixed_point(cfg, paths, [-10.0], with_radius=False)
    # e^{-2 l |t0| / 2} = e^{-60}: round-off scale
    assert est.initial_spread < 1e-13


def test_pinned_brownian_cauchy_gaps():
    cfg = config()
    est = pullback_fixed_point(cfg, brownian_paths(5005, 3, t_start=-60.0), [-5.0, -10.0, -20.0])
    assert est.converged, est.diagnostics
    assert est.cauchy_gaps[0] > est.cauchy_gaps[1]
    assert est.contained
    assert np.linalg.norm(est.point) <= est.radius


def test_radius_monotone_in_horizon():
    cfg = config()
    paths = brownian_paths(5005, 3, t_start=-60.0)
    r1, r10, r20 = (absorbing_radius(cfg, paths, t0) for t0 in (-1.0, -10.0, -20.0))
    # the tail beyond -10 is weighted by e^{-100} or less, so only round-off separates r10 and r20
    assert 1.0 < r1 < r10
    assert r20 >= r10 * (1 - 1e-13)


def test_zero_noise_radius():
    assert absorbing_radius(config(drifts=[linear_drift(6)]), zero_paths(3), -10.0) == 1.0


def test_orbit_residual_zero_noise():
    cfg = config(drifts=[linear_drift(6)])
    assert stationary_orbit_residual(cfg, zero_paths(3), horizon=-10.0) == 0.0


def test_orbit_residual_pinned():
    cfg = config()
    paths = brownian_paths(5005, 3, t_start=-60.0)
    res20 = stationary_orbit_residual(cfg, paths, (0.0, 1.0, 2.0), horizon=-20.0)
    res1 = stationary_orbit_residual(cfg, paths, (0.0, 1.0, 2.0), horizon=-1.0)
    assert res20 < 1e-4
    assert res20 < res1


def test_horizon_validation():
    def ends(t0, x0):
        return x0

    with pytest.raises(ParameterError):
        pullback_estimate(ends, [-10.0, -5.0], np.zeros((2, 1)))
    with pytest.raises(ParameterError):
        pullback_estimate(ends, [1.0], np.zeros((2, 1)))
    with pytest.raises(ParameterError):
        pullback_estimate(ends, [-1.0], np.zeros((1, 1)))


def test_non_cauchy_is_reported():
    # an endpoint map that never forgets its start time
    est = pullback_estimate(lambda t0, x0: x0 + t0, [-1.0, -2.0, -3.0], np.zeros((2, 1)))
    assert not est.converged
    assert est.diagnostics
