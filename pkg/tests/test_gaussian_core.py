import numpy as np
import pytest
from models.GaussianState import GaussianState
from processing.exceptions import (NotSymmetricError,
                                   NotPSDError,
                                   WeightMismatchError)
from processing.gaussian_core import (make_sigma_set,
                                      moments_from_points,
                                      psd_sqrt,
                                      sigma_weights,
                                      unscented_transform)


class TestPsdSqrt:

    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(2)), np.eye(2), atol=1e-15)

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])),
                                   np.diag([2.0, 3.0]), atol=1e-14)

    def test_random_psd_squares_back(self, rng):
        for n in (1, 3, 6):
            A = rng.standard_normal((n, n))
            M = A @ A.T
            S = psd_sqrt(M)
            np.testing.assert_allclose(S, S.T, atol=1e-14)
            assert np.linalg.norm(S @ S - M) / np.linalg.norm(M) <= 1e-9

    def test_rank_deficient_is_clamped(self):
        v = np.array([[1.0], [2.0]])
        S = psd_sqrt(v @ v.T)
        np.testing.assert_allclose(S @ S, v @ v.T, atol=1e-12)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetricError):
            psd_sqrt(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_not_psd(self):
        with pytest.raises(NotPSDError):
            psd_sqrt(np.diag([1.0, -0.1]))


class TestSigmaSet:

    def test_standard_normal_points(self):
        g = GaussianState(mean=[0.0, 0.0], cov=np.eye(2))
        s = make_sigma_set(g, 2.0)
        expected = np.array([[0, 2, 0, -2, 0],
                             [0, 0, 2, 0, -2]], dtype=float)
        np.testing.assert_allclose(s.points, expected, atol=1e-15)
        np.testing.assert_allclose(s.weights, [0.5, 0.125, 0.125, 0.125, 0.125])

    def test_collapsed_covariance(self):
        m = np.array([-10.0, 0.0])
        s = make_sigma_set(GaussianState(mean=m, cov=np.zeros((2, 2))))
        assert s.size == 5
        np.testing.assert_array_equal(s.points, np.tile(m[:, None], 5))

    def test_weights_sum_to_one(self):
        for n in range(1, 8):
            for kappa in (0.5, 2.0, 3.0):
                assert sigma_weights(n, kappa).sum() == pytest.approx(1.0, abs=1e-14)

    def test_kappa_must_be_positive(self):
        with pytest.raises(ValueError):
            sigma_weights(2, 0.0)


class TestMoments:

    def test_round_trip(self, rng):
        A = rng.standard_normal((3, 3))
        g = GaussianState(mean=rng.standard_normal(3), cov=A @ A.T)
        s = make_sigma_set(g)
        back = moments_from_points(s.points, s.weights)
        np.testing.assert_allclose(back.mean, g.mean, atol=1e-10)
        np.testing.assert_allclose(back.cov, g.cov, atol=1e-10)

    def test_equal_points(self):
        p = np.array([1.5, -2.0])
        back = moments_from_points(np.tile(p[:, None], 5), sigma_weights(2))
        np.testing.assert_allclose(back.mean, p)
        np.testing.assert_allclose(back.cov, np.zeros((2, 2)), atol=1e-15)

    def test_square_of_standard_normal(self):
        points = np.array([[0.0, 3.0, 3.0]])
        back = moments_from_points(points, [2 / 3, 1 / 6, 1 / 6])
        assert back.mean[0] == pytest.approx(1.0, abs=1e-14)

    def test_weight_mismatch(self):
        with pytest.raises(WeightMismatchError):
            moments_from_points(np.zeros((2, 5)), np.full(3, 1 / 3))


class TestUnscentedTransform:

    def test_affine_is_exact(self, rng):
        A = rng.standard_normal((3, 4))
        b = rng.standard_normal(3)
        B = rng.standard_normal((4, 4))
        g = GaussianState(mean=rng.standard_normal(4), cov=B @ B.T)
        out = unscented_transform(lambda x: A @ x + b, g)
        mean, cov = A @ g.mean + b, A @ g.cov @ A.T
        assert np.linalg.norm(out.mean - mean) <= 1e-10 * np.linalg.norm(mean)
        assert np.linalg.norm(out.cov - cov) <= 1e-10 * np.linalg.norm(cov)

    def test_identity_returns_input(self):
        g = GaussianState(mean=[1.0, 2.0], cov=[[2.0, 0.3], [0.3, 1.0]])
        out = unscented_transform(lambda x: x, g)
        np.testing.assert_allclose(out.mean, g.mean, atol=1e-13)
        np.testing.assert_allclose(out.cov, g.cov, atol=1e-13)

    def test_square_against_monte_carlo(self, rng):
        g = GaussianState(mean=[0.0], cov=[[1.0]])
        ut = unscented_transform(lambda x: x ** 2, g, 2.0)
        assert ut.mean[0] == pytest.approx(1.0, abs=1e-14)
        z = rng.standard_normal(1_000_000) ** 2
        se = z.std(ddof=1) / np.sqrt(z.size)
        assert abs(ut.mean[0] - z.mean()) <= 3.0 * se
