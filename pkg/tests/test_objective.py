import numpy as np
import pytest

from ellgraph.exceptions import NotPositiveDefinite
from ellgraph.linalg import spd_inverse
from ellgraph.manifolds import SPDManifold
from ellgraph.objective import (
    DataSet,
    DensityGenerator,
    PenaltyConfig,
    likelihood_egrad,
    log_cosh,
    neg_log_likelihood,
    objective_and_egrad,
    objective_value,
    penalty_egrad,
    penalty_value,
    weight_u,
)

from helpers import central_diff_spd, rand_spd, rand_sym


class TestDensityGenerator:
    def test_gaussian_weight_is_one(self):
        gen = DensityGenerator.gaussian()
        assert np.all(weight_u(gen, np.array([0.0, 1.0, 1e6]), 7) == 1.0)

    def test_student_weight_formula(self):
        gen = DensityGenerator.student(5.0)
        # (nu + p) / (nu + t) = 15 / 10
        assert weight_u(gen, 5.0, 10) == pytest.approx(1.5)

    def test_student_weight_vanishes_at_infinity(self):
        gen = DensityGenerator.student(4.0)
        assert weight_u(gen, 1e12, 5) == pytest.approx(0.0, abs=1e-9)

    def test_student_weight_monotone(self):
        gen = DensityGenerator.student(3.0)
        t = np.linspace(0.0, 100.0, 200)
        w = weight_u(gen, t, 6)
        assert np.all(np.diff(w) <= 0)

    def test_nu_validation(self):
        with pytest.raises(ValueError):
            DensityGenerator.student(2.0)
        with pytest.raises(ValueError):
            DensityGenerator("student")
        with pytest.raises(ValueError):
            DensityGenerator("cauchy")


class TestDataSet:
    def test_basic(self):
        ds = DataSet(np.zeros((3, 2)) + 1.0, names=("a", "b"))
        assert ds.n == 3 and ds.p == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            DataSet(np.ones((3, 1)))
        with pytest.raises(ValueError):
            DataSet(np.array([[1.0, np.nan]]))
        with pytest.raises(ValueError):
            DataSet(np.ones((2, 3)), names=("a",))


class TestNegLogLikelihood:
    def test_gaussian_identity_covariance(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((10, 3))
        value = neg_log_likelihood(np.eye(3), x, DensityGenerator.gaussian())
        assert value == pytest.approx(np.sum(x**2) / (2 * 10))

    def test_gaussian_single_sample(self):
        # rho(4)/1 = 2 plus zero log-determinant; p >= 2 padded with a zero.
        x = np.array([[2.0, 0.0]])
        value = neg_log_likelihood(np.eye(2), x, DensityGenerator.gaussian())
        assert value == pytest.approx(2.0)

    def test_student_zero_sample(self):
        # rho(0) = 0, so only log det / 2 = 1 remains for sigma = e^2 I_1-like.
        x = np.array([[0.0, 0.0]])
        sigma = np.diag([np.e**2, 1.0])
        value = neg_log_likelihood(sigma, x, DensityGenerator.student(5.0))
        assert value == pytest.approx(1.0)

    def test_student_scale_invariance_of_differences(self):
        # Joint rescaling x -> c x, sigma -> c^2 sigma shifts the value by a
        # constant, so differences across covariance candidates are invariant.
        rng = np.random.default_rng(1)
        x = rng.standard_normal((30, 4))
        s1, s2 = rand_spd(rng, 4), rand_spd(rng, 4)
        gen = DensityGenerator.student(4.5)
        c = 3.7
        d_plain = neg_log_likelihood(s1, x, gen) - neg_log_likelihood(s2, x, gen)
        d_scaled = neg_log_likelihood(c**2 * s1, c * x, gen) - neg_log_likelihood(
            c**2 * s2, c * x, gen
        )
        assert d_scaled == pytest.approx(d_plain, abs=1e-9)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            neg_log_likelihood(np.diag([1.0, -1.0]), np.ones((2, 2)), DensityGenerator.gaussian())


class TestLikelihoodGradient:
    def test_scm_is_gaussian_stationary_point(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((40, 4))
        scm = x.T @ x / 40
        g = likelihood_egrad(scm, x, DensityGenerator.gaussian())
        rgrad = SPDManifold().egrad_to_rgrad(scm, g)
        assert np.max(np.abs(rgrad)) <= 1e-12

    def test_scalar_arithmetic(self):
        # p = 1 analog embedded in p = 2: gradient entry 1/2 - 4/2 = -1.5.
        x = np.array([[2.0, 0.0]])
        g = likelihood_egrad(np.eye(2), x, DensityGenerator.gaussian())
        assert g[0, 0] == pytest.approx(-1.5)
        assert g[1, 1] == pytest.approx(0.5)

    def test_riemannian_form_is_half_sigma_minus_weighted_scm(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((25, 4))
        sigma = rand_spd(rng, 4)
        gen = DensityGenerator.student(5.0)
        g = likelihood_egrad(sigma, x, gen)
        rgrad = SPDManifold().egrad_to_rgrad(sigma, g)
        theta = spd_inverse(sigma)
        t = np.einsum("ij,jk,ik->i", x, theta, x)
        u = gen.weight(t, 4)
        expected = sigma / 2 - (x.T @ (u[:, None] * x)) / (2 * 25)
        assert np.max(np.abs(rgrad - expected)) <= 1e-10

    def test_finite_differences_student(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((40, 5))
        sigma = rand_spd(rng, 5)
        gen = DensityGenerator.student(4.0)
        g = likelihood_egrad(sigma, x, gen)

        def fun(s):
            return neg_log_likelihood(s, x, gen)

        for _ in range(10):
            xi = rand_sym(rng, 5)
            fd = central_diff_spd(fun, sigma, xi)
            assert float(np.sum(g * xi)) == pytest.approx(fd, rel=1e-6)

    def test_symmetric(self):
        rng = np.random.default_rng(5)
        g = likelihood_egrad(
            rand_spd(rng, 4), rng.standard_normal((12, 4)), DensityGenerator.gaussian()
        )
        assert np.max(np.abs(g - g.T)) <= 1e-12


class TestLogCosh:
    def test_zero(self):
        assert log_cosh(0.0, 1e-12) == 0.0

    def test_linear_asymptote(self):
        eps = 1e-12
        val = log_cosh(0.3, eps)
        assert val == pytest.approx(0.3 - eps * np.log(2.0), abs=1e-15)

    def test_quadratic_regime(self):
        # phi(t) ~ t^2 / (2 eps) for small |t| / eps.
        assert log_cosh(1e-3, 1.0) == pytest.approx(1e-3**2 / 2.0, abs=1e-9)

    def test_matches_direct_formula_midrange(self):
        t = np.linspace(-5.0, 5.0, 101)
        direct = 0.25 * np.log(np.cosh(t / 0.25))
        assert np.max(np.abs(log_cosh(t, 0.25) - direct)) <= 1e-12

    def test_no_overflow(self):
        out = log_cosh(np.array([1e6, -1e6]), 1e-12)
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(1e6, rel=1e-12)


class TestPenalty:
    def test_diagonal_covariance_zero(self):
        assert penalty_value(np.diag([2.0, 3.0, 1.0]), PenaltyConfig(lam=1.0)) == 0.0

    def test_single_off_diagonal_entry(self):
        # Precision with theta_12 = 0.3 counted twice by the q != l sum.
        theta = np.array([[1.0, 0.3], [0.3, 1.0]])
        sigma = spd_inverse(theta)
        cfg = PenaltyConfig(lam=1.0, epsilon=1e-12)
        expected = 2.0 * (0.3 - 1e-12 * np.log(2.0))
        assert penalty_value(sigma, cfg) == pytest.approx(expected, rel=1e-9)

    def test_non_negative_and_zero_iff_diagonal(self):
        rng = np.random.default_rng(6)
        cfg = PenaltyConfig(lam=1.0)
        for _ in range(20):
            sigma = rand_spd(rng, 4)
            assert penalty_value(sigma, cfg) >= 0.0
        assert penalty_value(np.diag([1.0, 2.0]), cfg) == 0.0

    def test_gradient_zero_for_diagonal(self):
        g = penalty_egrad(np.diag([1.0, 2.0, 3.0]), PenaltyConfig(lam=1.0))
        assert np.max(np.abs(g)) == 0.0

    def test_saturated_weights_are_signs(self):
        rng = np.random.default_rng(7)
        sigma = rand_spd(rng, 4)
        theta = spd_inverse(sigma)
        cfg = PenaltyConfig(lam=1.0, epsilon=1e-12)
        g = penalty_egrad(sigma, cfg)
        m = np.sign(theta)
        np.fill_diagonal(m, 0.0)
        expected = -(theta @ m @ theta)
        assert np.max(np.abs(g - (expected + expected.T) / 2)) <= 1e-9

    def test_finite_differences(self):
        rng = np.random.default_rng(8)
        sigma = rand_spd(rng, 4)
        cfg = PenaltyConfig(lam=1.0, epsilon=1e-12)
        g = penalty_egrad(sigma, cfg)

        def fun(s):
            return penalty_value(s, cfg)

        for _ in range(10):
            xi = rand_sym(rng, 4)
            fd = central_diff_spd(fun, sigma, xi)
            assert float(np.sum(g * xi)) == pytest.approx(fd, rel=1e-5)


class TestCombinedObjective:
    def test_lambda_zero_reduces_to_likelihood(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((20, 4))
        sigma = rand_spd(rng, 4)
        gen = DensityGenerator.gaussian()
        value, grad = objective_and_egrad(sigma, x, gen, PenaltyConfig(lam=0.0))
        assert value == pytest.approx(neg_log_likelihood(sigma, x, gen), abs=1e-12)
        assert np.max(np.abs(grad - likelihood_egrad(sigma, x, gen))) <= 1e-12

    def test_decomposition(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((20, 4))
        sigma = rand_spd(rng, 4)
        gen = DensityGenerator.student(6.0)
        cfg = PenaltyConfig(lam=0.3)
        value, grad = objective_and_egrad(sigma, x, gen, cfg)
        expected_value = neg_log_likelihood(sigma, x, gen) + cfg.lam * penalty_value(
            sigma, cfg
        )
        expected_grad = likelihood_egrad(sigma, x, gen) + cfg.lam * penalty_egrad(
            sigma, cfg
        )
        assert value == pytest.approx(expected_value, abs=1e-12)
        assert np.max(np.abs(grad - expected_grad)) <= 1e-12
        assert objective_value(sigma, x, gen, cfg) == pytest.approx(value, abs=1e-12)

    def test_gradients_symmetric(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((15, 3))
        _, grad = objective_and_egrad(
            rand_spd(rng, 3), x, DensityGenerator.gaussian(), PenaltyConfig(lam=0.2)
        )
        assert np.max(np.abs(grad - grad.T)) <= 1e-12

    def test_accepts_dataset(self):
        rng = np.random.default_rng(12)
        ds = DataSet(rng.standard_normal((10, 3)))
        value = objective_value(
            np.eye(3), ds, DensityGenerator.gaussian(), PenaltyConfig(lam=0.0)
        )
        assert np.isfinite(value)


def test_penalty_config_validation():
    with pytest.raises(ValueError):
        PenaltyConfig(lam=-0.1)
    with pytest.raises(ValueError):
        PenaltyConfig(epsilon=0.0)
