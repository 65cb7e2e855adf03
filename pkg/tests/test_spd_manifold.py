import numpy as np
import pytest
import scipy.linalg

from ellgraph.exceptions import NotPositiveDefinite
from ellgraph.linalg import is_spd, sym
from ellgraph.manifolds import SPDManifold

from helpers import rand_spd, rand_sym

MAN = SPDManifold()


class TestMetric:
    def test_identity_base_is_frobenius(self):
        rng = np.random.default_rng(0)
        xi = rand_sym(rng, 4)
        assert MAN.metric(np.eye(4), xi, xi) == pytest.approx(np.sum(xi**2))

    def test_scalar_case(self):
        # tr((1/2) * 1 * (1/2) * 1) = 0.25
        assert MAN.metric(np.array([[2.0]]), np.array([[1.0]]), np.array([[1.0]])) == \
            pytest.approx(0.25)

    def test_affine_invariance(self):
        rng = np.random.default_rng(1)
        sigma = rand_spd(rng, 5)
        xi, eta = rand_sym(rng, 5), rand_sym(rng, 5)
        a = rng.standard_normal((5, 5)) + 2 * np.eye(5)
        lhs = MAN.metric(sym(a @ sigma @ a.T), sym(a @ xi @ a.T), sym(a @ eta @ a.T))
        assert lhs == pytest.approx(MAN.metric(sigma, xi, eta), rel=1e-9)

    def test_symmetry_and_positivity(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            sigma = rand_spd(rng, 4)
            xi, eta = rand_sym(rng, 4), rand_sym(rng, 4)
            assert MAN.metric(sigma, xi, eta) == pytest.approx(
                MAN.metric(sigma, eta, xi), rel=1e-10, abs=1e-12
            )
            assert MAN.metric(sigma, xi, xi) > 0.0

    def test_rejects_indefinite_base(self):
        with pytest.raises(NotPositiveDefinite):
            MAN.metric(np.diag([1.0, -1.0]), np.eye(2), np.eye(2))


class TestGradientConversion:
    def test_identity_base(self):
        rng = np.random.default_rng(3)
        g = rand_sym(rng, 4)
        assert np.allclose(MAN.egrad_to_rgrad(np.eye(4), g), g)

    def test_scalar(self):
        out = MAN.egrad_to_rgrad(np.array([[2.0]]), np.array([[3.0]]))
        assert out == pytest.approx(np.array([[12.0]]))

    def test_depends_only_on_symmetric_part(self):
        rng = np.random.default_rng(4)
        sigma = rand_spd(rng, 4)
        g = rng.standard_normal((4, 4))
        assert np.array_equal(
            MAN.egrad_to_rgrad(sigma, g), MAN.egrad_to_rgrad(sigma, sym(g))
        )

    def test_duality_pairing(self):
        # metric(sigma, rgrad, xi) equals the Euclidean pairing tr(sym(G) xi),
        # which is the directional derivative the gradient must represent.
        rng = np.random.default_rng(5)
        sigma = rand_spd(rng, 4)
        g = rng.standard_normal((4, 4))
        rgrad = MAN.egrad_to_rgrad(sigma, g)
        for _ in range(10):
            xi = rand_sym(rng, 4)
            assert MAN.metric(sigma, rgrad, xi) == pytest.approx(
                float(np.sum(sym(g) * xi)), rel=1e-9
            )

    def test_duality_against_finite_differences(self):
        # f(S) = log det S has Euclidean gradient inv(S).
        rng = np.random.default_rng(6)
        sigma = rand_spd(rng, 4)
        rgrad = MAN.egrad_to_rgrad(sigma, np.linalg.inv(sigma))
        for _ in range(5):
            xi = rand_sym(rng, 4)
            h = 1e-6 / np.linalg.norm(xi)
            fd = (np.linalg.slogdet(sigma + h * xi)[1]
                  - np.linalg.slogdet(sigma - h * xi)[1]) / (2 * h)
            assert MAN.metric(sigma, rgrad, xi) == pytest.approx(fd, rel=1e-6)


class TestTransport:
    def test_same_point(self):
        rng = np.random.default_rng(7)
        sigma = rand_spd(rng, 4)
        xi = rand_sym(rng, 4)
        assert np.max(np.abs(MAN.transport(sigma, sigma, xi) - xi)) <= 1e-10

    def test_scalar(self):
        out = MAN.transport(np.array([[1.0]]), np.array([[4.0]]), np.array([[1.0]]))
        assert out == pytest.approx(np.array([[4.0]]))

    def test_isometry(self):
        rng = np.random.default_rng(8)
        sigma, sigma_bar = rand_spd(rng, 4), rand_spd(rng, 4)
        xi, eta = rand_sym(rng, 4), rand_sym(rng, 4)
        t = MAN.transporter(sigma, sigma_bar)
        assert MAN.metric(sigma_bar, t(xi), t(eta)) == pytest.approx(
            MAN.metric(sigma, xi, eta), rel=1e-8
        )

    def test_linearity(self):
        rng = np.random.default_rng(9)
        sigma, sigma_bar = rand_spd(rng, 4), rand_spd(rng, 4)
        xi, eta = rand_sym(rng, 4), rand_sym(rng, 4)
        t = MAN.transporter(sigma, sigma_bar)
        combined = t(2.0 * xi - 3.0 * eta)
        assert np.max(np.abs(combined - (2.0 * t(xi) - 3.0 * t(eta)))) <= 1e-10


class TestRetraction:
    def test_zero_tangent(self):
        rng = np.random.default_rng(10)
        sigma = rand_spd(rng, 4)
        assert np.array_equal(MAN.retract(sigma, np.zeros((4, 4))), sigma)

    def test_scalar_second_order(self):
        # 1 + 1 + 1/2 = 2.5, versus the exact geodesic exp(1) ~ 2.71828.
        out = MAN.retract(np.array([[1.0]]), np.array([[1.0]]))
        assert out == pytest.approx(np.array([[2.5]]))

    def test_output_spd(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            sigma = rand_spd(rng, 4)
            xi = rand_sym(rng, 4, scale=0.3)
            assert is_spd(MAN.retract(sigma, xi))

    def test_geodesic_order(self):
        # Distance to the exact geodesic decays as O(t^3): log-log slope >= 2.7.
        rng = np.random.default_rng(12)
        sigma = rand_spd(rng, 3)
        xi = rand_sym(rng, 3)
        sq = scipy.linalg.sqrtm(sigma).real
        isq = np.linalg.inv(sq)
        steps = np.array([1e-1, 1e-2, 1e-3])
        dists = []
        for t in steps:
            geo = sq @ scipy.linalg.expm(t * isq @ xi @ isq) @ sq
            dists.append(np.linalg.norm(MAN.retract(sigma, t * xi) - geo))
        slope = (np.log(dists[0]) - np.log(dists[-1])) / (
            np.log(steps[0]) - np.log(steps[-1])
        )
        assert slope >= 2.7

    def test_psd_shift_survives_huge_steps(self):
        # The formula equals sigma/2 + (sigma+xi) inv(sigma) (sigma+xi) / 2,
        # so even violent steps stay positive definite.
        rng = np.random.default_rng(13)
        sigma = rand_spd(rng, 4)
        for scale in (1e2, 1e4, 1e6):
            assert is_spd(MAN.retract(sigma, rand_sym(rng, 4, scale=scale)))
