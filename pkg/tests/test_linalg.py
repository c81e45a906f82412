import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from kme_decon.errors import ShapeError, SingularSystemError
from kme_decon.linalg import (JITTER_MAX, JITTER_START, LuFactorization, factorize, gaussian_logpdf,
                              general_solve, reg_solve, woodbury_left)
from oracles import random_spd


class TestRegSolve:
    def test_scalar(self):
        np.testing.assert_allclose(reg_solve([[1.0]], 1.0, [[2.0]]), [[1.0]])

    def test_random_spd_vs_dense_inverse(self):
        rng = np.random.default_rng(0)
        g = random_spd(rng, 8)
        b = rng.normal(size=(8, 3))
        oracle = np.linalg.inv(g + 0.1 * np.eye(8)) @ b
        assert np.max(np.abs(reg_solve(g, 0.1, b) - oracle)) <= 1e-8

    def test_zero_system_is_singular(self):
        with pytest.raises(SingularSystemError):
            reg_solve(np.zeros((3, 3)), 0.0, np.ones(3))

    def test_rejects_asymmetric(self):
        with pytest.raises(ShapeError):
            reg_solve([[1.0, 2.0], [0.0, 1.0]], 0.1, [1.0, 1.0])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**16), n=st.integers(1, 64), c=st.floats(1e-3, 10.0))
    def test_matches_dense_inverse(self, seed, n, c):
        rng = np.random.default_rng(seed)
        g = random_spd(rng, n, floor=0.0)
        b = rng.normal(size=n)
        oracle = np.linalg.inv(g + c * np.eye(n)) @ b
        np.testing.assert_allclose(reg_solve(g, c, b), oracle, atol=1e-8)


class TestFactorize:
    def test_reconstructs_input(self):
        g = random_spd(np.random.default_rng(1), 10)
        fac = factorize(g)
        assert fac.jitter_used == 0.0
        assert np.linalg.norm(fac.factor @ fac.factor.T - g) <= 1e-8 * np.linalg.norm(g)

    def test_rank_deficient_gets_bounded_jitter(self):
        v = np.random.default_rng(2).normal(size=(6, 2))
        g = v @ v.T
        fac = factorize(g)
        assert JITTER_START <= fac.jitter_used <= JITTER_MAX
        # escalation is deterministic
        assert factorize(g).jitter_used == fac.jitter_used
        scale = np.trace(g) / 6
        rebuilt = fac.factor @ fac.factor.T
        target = g + fac.jitter_used * scale * np.eye(6)
        assert np.linalg.norm(rebuilt - target) <= 1e-8 * np.linalg.norm(target)

    def test_indefinite_raises_with_trace(self):
        with pytest.raises(SingularSystemError) as info:
            factorize(np.diag([2.0, -1.0]))
        assert info.value.jitter_trace[0] == 0.0
        assert len(info.value.jitter_trace) > 2

    def test_logdet_and_half_solves(self):
        rng = np.random.default_rng(3)
        g = random_spd(rng, 5)
        fac = factorize(g)
        b = rng.normal(size=5)
        np.testing.assert_allclose(fac.logdet(), np.linalg.slogdet(g)[1], rtol=1e-12)
        np.testing.assert_allclose(fac.half_solve_t(fac.half_solve(b)), np.linalg.solve(g, b),
                                   rtol=1e-10)

    def test_non_square(self):
        with pytest.raises(ShapeError):
            factorize(np.ones((2, 3)))


class TestGeneralSolve:
    def test_nonsymmetric_vs_inverse(self):
        rng = np.random.default_rng(4)
        m = rng.normal(size=(6, 6)) + 3 * np.eye(6)
        b = rng.normal(size=(6, 2))
        np.testing.assert_allclose(general_solve(m, b), np.linalg.inv(m) @ b, rtol=1e-10)

    def test_transpose_solve_and_slogdet(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=(4, 4))
        lu = LuFactorization(m)
        b = rng.normal(size=4)
        np.testing.assert_allclose(lu.solve(b, trans=1), np.linalg.solve(m.T, b), rtol=1e-10)
        sign, logdet = np.linalg.slogdet(m)
        assert lu.slogdet()[0] == sign
        np.testing.assert_allclose(lu.slogdet()[1], logdet, rtol=1e-12)

    def test_singular(self):
        with pytest.raises(SingularSystemError):
            general_solve(np.ones((3, 3)), np.ones(3))


class TestWoodbury:
    def test_scalar(self):
        left, right = woodbury_left([[2.0]], [[3.0]], 1.0)
        np.testing.assert_allclose(left, [[2.0 / 7.0]])
        np.testing.assert_allclose(right, [[0.285714]], atol=1e-6)

    def test_identity(self):
        left, right = woodbury_left(np.eye(3), np.eye(3), 1.0)
        np.testing.assert_allclose(left, np.eye(3) / 2)
        np.testing.assert_allclose(right, np.eye(3) / 2)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_rectangular(self, seed):
        rng = np.random.default_rng(seed)
        b, c = rng.normal(size=(5, 7)), rng.normal(size=(7, 5))
        left, right = woodbury_left(b, c, 0.3)
        assert np.max(np.abs(left - right)) <= 1e-9 * np.max(np.abs(right))
        # dense oracle for one side
        oracle = b @ np.linalg.inv(c @ b + 0.3 * np.eye(7))
        np.testing.assert_allclose(left, oracle, rtol=1e-8, atol=1e-12)

    def test_cheaper_side(self):
        rng = np.random.default_rng(6)
        b, c = rng.normal(size=(2, 9)), rng.normal(size=(9, 2))
        np.testing.assert_allclose(woodbury_left(b, c, 0.5, both=False),
                                   woodbury_left(b, c, 0.5)[1])

    def test_bad_input(self):
        with pytest.raises(ShapeError):
            woodbury_left(np.ones((2, 3)), np.ones((2, 3)), 1.0)
        with pytest.raises(ShapeError):
            woodbury_left(np.ones((2, 2)), np.ones((2, 2)), 0.0)


class TestGaussianLogpdf:
    def test_standard_normal(self):
        np.testing.assert_allclose(gaussian_logpdf([0.0], [0.0], [[1.0]]), -0.918939, atol=1e-6)

    def test_scaled_variance(self):
        # the quoted six-decimal value -1.030508 differs from the analytic one in the last digit
        np.testing.assert_allclose(gaussian_logpdf([0.0], [0.0], [[1.25]]), -1.030508, atol=5e-6)
        np.testing.assert_allclose(gaussian_logpdf([0.0], [0.0], [[1.25]]),
                                   -0.5 * np.log(2 * np.pi * 1.25), rtol=1e-14)

    def test_zero_quadratic_form(self):
        rng = np.random.default_rng(7)
        cov = random_spd(rng, 4)
        x = rng.normal(size=4)
        expected = -0.5 * (np.linalg.slogdet(cov)[1] + 4 * np.log(2 * np.pi))
        np.testing.assert_allclose(gaussian_logpdf(x, x, cov), expected, rtol=1e-12)

    def test_matches_scipy(self):
        rng = np.random.default_rng(8)
        cov = random_spd(rng, 6)
        x, mu = rng.normal(size=6), rng.normal(size=6)
        np.testing.assert_allclose(gaussian_logpdf(x, mu, cov),
                                   stats.multivariate_normal(mu, cov).logpdf(x), rtol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**16), n=st.integers(1, 12))
    def test_permutation_invariance(self, seed, n):
        rng = np.random.default_rng(seed)
        cov = random_spd(rng, n)
        x, mu = rng.normal(size=n), rng.normal(size=n)
        perm = rng.permutation(n)
        a = gaussian_logpdf(x, mu, cov)
        b = gaussian_logpdf(x[perm], mu[perm], cov[np.ix_(perm, perm)])
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            gaussian_logpdf([0.0, 1.0], 0.0, [[1.0]])
