import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import norm


def test_noise_cov_is_broadcast_per_stage(problem_factory):
    prob = problem_factory(nx=2, N=4, noise_cov=np.diag([1.0, 2.0]))
    assert prob.noise_cov.shape == (4, 2, 2)
    np.testing.assert_array_equal(prob.noise_cov[3], np.diag([1.0, 2.0]))


def test_noise_cov_must_be_psd(problem_factory):
    with pytest.raises(ValidationError):
        problem_factory(nx=2, noise_cov=np.diag([1.0, -1.0]))


def test_init_dimension_checked(problem_factory):
    with pytest.raises(ValidationError):
        problem_factory(nx=2, mean=np.zeros(3), cov=np.zeros((3, 3)))


def test_scalar_bound_is_expanded(problem_factory):
    prob = problem_factory(N=5, control_bound=0.5)
    np.testing.assert_array_equal(prob.control_bound, np.full(5, 0.5))
    assert prob.has_constraint


def test_multiplier_defaults_and_quantile(problem_factory):
    assert problem_factory().multiplier == 3.0
    prob = problem_factory(prob_level=0.99865)
    assert prob.multiplier == pytest.approx(norm.ppf(0.99865))
    assert prob.multiplier == pytest.approx(3.0, abs=1e-3)


def test_tail_starts_from_known_state(problem_factory):
    prob = problem_factory(nx=2, N=6, cov=np.eye(2), control_bound=np.arange(1.0, 7.0),
                           noise_cov=np.stack([np.eye(2) * (k + 1) for k in range(6)]))
    sub = prob.tail(2, [1.0, -1.0])
    assert sub.N == 4
    assert sub.stage(0) == 2
    np.testing.assert_array_equal(sub.init.mean, [1.0, -1.0])
    np.testing.assert_array_equal(sub.init.cov, np.zeros((2, 2)))
    np.testing.assert_array_equal(sub.control_bound, [3.0, 4.0, 5.0, 6.0])
    np.testing.assert_array_equal(sub.noise_cov[0], 3.0 * np.eye(2))
    # nested tails keep counting absolute stages
    assert sub.tail(1, [0.0, 0.0]).stage(0) == 3


def test_tail_out_of_range(problem_factory):
    with pytest.raises(ValueError):
        problem_factory(N=3).tail(3, [0.0])


def test_with_bounds_and_deterministic(problem_factory):
    prob = problem_factory(nx=2, N=3, cov=np.eye(2), noise_cov=np.eye(2),
                           control_bound=1.0)
    assert np.all(prob.with_bounds([0.5, 1.0, 1.0]).control_bound == [0.5, 1.0, 1.0])
    with pytest.raises(ValueError):
        prob.with_bounds([1.0, 0.0, 1.0])
    det = prob.deterministic()
    assert not det.noise_cov.any()
    assert not det.init.cov.any()
    np.testing.assert_array_equal(prob.noise_cov[0], np.eye(2))
