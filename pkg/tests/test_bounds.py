import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from levysync.bounds import (
    VARIANTS, CouplingMatrixSpec, admissible_beta_range, build_coupling_matrix, closed_form_eigenvalues,
    gronwall_bound_check, mu_max_formula, quadratic_form_margin,
)
from levysync.errors import ParameterError, ShapeError
from levysync.levy_process import TimeGrid
from levysync.linalg import eigvalsh, expm


def spec_for(variant, N, lam, l=5.0):
    if variant in ("D", "D_tilde"):
        return CouplingMatrixSpec(variant, N, lam, l=l)
    _, beta = admissible_beta_range(N)
    return CouplingMatrixSpec(variant, N, lam, beta=beta)


class TestLinalg:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 2 ** 32 - 1))
    def test_eigvalsh_matches_lapack(self, n, seed):
        a = np.random.default_rng(seed).normal(size=(n, n))
        a = a + a.T
        np.testing.assert_allclose(eigvalsh(a), scipy.linalg.eigvalsh(a), atol=1e-10 * max(1, np.abs(a).max()))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), st.floats(1e-3, 30.0), st.integers(0, 2 ** 32 - 1))
    def test_expm_matches_scipy(self, n, scale, seed):
        a = scale * np.random.default_rng(seed).normal(size=(n, n)) / n
        ref = scipy.linalg.expm(a)
        np.testing.assert_allclose(expm(a), ref, rtol=1e-11, atol=1e-12 * np.abs(ref).max())

    def test_expm_batched(self):
        a = np.random.default_rng(1).normal(size=(4, 3, 3))
        np.testing.assert_allclose(expm(a), np.stack([scipy.linalg.expm(m) for m in a]), rtol=1e-12)

    def test_not_symmetric(self):
        with pytest.raises(ShapeError):
            eigvalsh(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestMatrices:
    def test_d_hand_construction(self):
        m = build_coupling_matrix(CouplingMatrixSpec("D", 3, 1.0, l=5.0))
        np.testing.assert_array_equal(np.diag(m), [-10.0] * 3)
        np.testing.assert_array_equal(m[~np.eye(3, dtype=bool)], [1.0] * 6)

    def test_h_size_two(self):
        m = build_coupling_matrix(CouplingMatrixSpec("H", 4, 3.0, beta=1.5))
        np.testing.assert_array_equal(m, [[-4.5, 3.0], [3.0, -4.5]])

    def test_d_zero_coupling(self):
        m = build_coupling_matrix(CouplingMatrixSpec("D", 5, 0.0, l=6.0))
        np.testing.assert_array_equal(m, -10.0 * np.eye(5))

    def test_missing_parameters(self):
        with pytest.raises(ParameterError):
            CouplingMatrixSpec("H", 4, 1.0)
        with pytest.raises(ParameterError):
            CouplingMatrixSpec("D", 4, 1.0)
        with pytest.raises(ParameterError):
            CouplingMatrixSpec("D", 1, 1.0, l=5.0)


class TestEigen:
    def test_d_example(self):
        rep = closed_form_eigenvalues(CouplingMatrixSpec("D", 3, 1.0, l=5.0))
        np.testing.assert_allclose(rep.eigenvalues, [-11, -11, -8], atol=1e-12)
        assert rep.mu_max == -8.0 == 2 - 2 * 5
        assert rep.agrees

    def test_h_example(self):
        beta = 1 - math.cos(4 * math.pi / 6)
        assert beta == pytest.approx(1.5)
        rep = closed_form_eigenvalues(CouplingMatrixSpec("H", 4, 1.0, beta=beta))
        np.testing.assert_allclose(rep.eigenvalues, [-2.5, -0.5], atol=1e-12)
        assert rep.mu_max == pytest.approx(mu_max_formula(4, beta)) == pytest.approx(-0.5)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_against_lapack(self, variant):
        for N in (3, 4, 7, 16, 33, 64):
            for lam in (1.0, 10.0, 1000.0):
                spec = spec_for(variant, N, lam)
                ref = scipy.linalg.eigvalsh(build_coupling_matrix(spec))
                rep = closed_form_eigenvalues(spec)
                assert rep.agrees
                np.testing.assert_allclose(rep.closed_form_values, ref, atol=1e-10 * rep.matrix_norm)

    def test_h_homogeneous_in_lambda(self):
        a = closed_form_eigenvalues(spec_for("H", 10, 1.0)).closed_form_values
        b = closed_form_eigenvalues(spec_for("H", 10, 7.0)).closed_form_values
        np.testing.assert_allclose(np.array(b), 7.0 * np.array(a), rtol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 64), st.floats(0.1, 1000.0), st.floats(4.01, 20.0))
    def test_d_mu_max_lambda_free(self, N, lam, l):
        rep = closed_form_eigenvalues(CouplingMatrixSpec("D", N, lam, l=l))
        assert rep.mu_max == pytest.approx(2 - 2 * l, abs=1e-9 * lam)
        assert rep.mu_max < -l

    def test_h_mu_max_negative(self):
        for N in range(4, 65, 2):
            (lo, hi), beta = admissible_beta_range(N)
            rep = closed_form_eigenvalues(CouplingMatrixSpec("H", N, 1.0, beta=beta))
            assert rep.mu_max == pytest.approx(mu_max_formula(N, beta), abs=1e-12)
            assert rep.mu_max < 0
        for N in range(5, 65, 2):
            _, beta = admissible_beta_range(N)
            assert closed_form_eigenvalues(CouplingMatrixSpec("H_tilde", N, 1.0, beta=beta)).mu_max < 0

    def test_quadratic_form(self, rng):
        for N in (3, 8, 20):
            spec = CouplingMatrixSpec("D", N, 10.0, l=5.0)
            assert quadratic_form_margin(spec, rng.normal(size=(100, N)), t=2.0) <= 1e-12


class TestBeta:
    def test_n4(self):
        (lo, hi), beta = admissible_beta_range(4)
        assert (lo, hi) == pytest.approx((1.0, 2.0))
        assert beta == pytest.approx(1.5)

    def test_n5(self):
        (lo, hi), beta = admissible_beta_range(5)
        assert (lo, hi) == pytest.approx((1.0, 2.0))
        assert beta == pytest.approx(1.5)

    def test_default_inside(self):
        for N in range(3, 65):
            (lo, hi), beta = admissible_beta_range(N)
            assert lo < beta < hi

    def test_small_n(self):
        with pytest.raises(ParameterError):
            admissible_beta_range(2)


class TestGronwall:
    def test_scalar_equality(self):
        h = 1e-3
        rep = gronwall_bound_check(lambda t: -1.0, [1.0], lambda t: 0.0, TimeGrid(0, 2, h))
        np.testing.assert_allclose(rep.bound[:, 0], np.exp(-rep.check_times), rtol=1e-12)
        assert abs(rep.margin) <= 10 * h

    def test_diagonal_closed_form(self):
        D = np.diag([-1.0, -3.0])
        psi = np.array([0.5, 2.0])
        rep = gronwall_bound_check(lambda t: D, [1.0, -1.0], lambda t: psi, TimeGrid(0, 2, 1e-3))
        t = rep.check_times[:, None]
        d, p0 = np.diag(D), np.array([1.0, -1.0])
        exact = np.exp(d * t) * p0 + psi / -d * (1 - np.exp(d * t))
        np.testing.assert_allclose(rep.bound, exact, atol=1e-6)

    def test_slack_stays_below(self):
        D = np.array([[-2.0, 0.5], [0.5, -2.0]])
        rep = gronwall_bound_check(
            lambda t: D, [1.0, 2.0], lambda t: np.array([1.0, np.cos(t)]), TimeGrid(0, 2, 1e-3),
            slack_fn=lambda t: np.array([0.3, 0.3]),
        )
        # equal at t = 0, strictly below afterwards
        assert np.all((rep.trajectory - rep.bound)[1:] < 0)
        assert rep.margin <= 1e-15
