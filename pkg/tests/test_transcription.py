import numpy as np
import pytest
from models.DoubleIntegratorConfig import DoubleIntegratorConfig
from models.GaussianState import GaussianState
from processing.ddp_solver import DDPSolver
from processing.exceptions import ConstraintFailureError, DynamicsFailureError
from processing.gaussian_core import make_sigma_set, sigma_weights
from processing.jacobians import jacobian
from processing.problems import build_double_integrator
from processing.transcription import (Transcription,
                                      chance_constraint_general,
                                      chance_constraint_norm2,
                                      expected_stage_cost,
                                      expected_terminal_cost,
                                      initial_stacked_state,
                                      noise_sigma_set,
                                      propagate,
                                      replicate_controls,
                                      rollout,
                                      stack,
                                      total_objective,
                                      transcribe_deterministic,
                                      tube,
                                      unstack)


def _sum_squares_state(x, u, w, k):
    return np.sum(x ** 2, axis=-1) * np.ones(u.shape[:-1])


def _sum_squares(x):
    return np.sum(x ** 2, axis=-1)


def _constant_cost(x, u, w, k):
    return np.full(np.broadcast_shapes(x.shape[:-1], u.shape[:-1]), 7.5)


def _control_norm(x, u, w, k):
    return np.linalg.norm(u, axis=-1) * np.ones(x.shape[:-1])


def _exploding(x, u, w, k):
    return x / 0.0


class TestPropagate:

    def test_double_integrator_first_step(self, di_problem):
        X = initial_stacked_state(di_problem)
        out = propagate(X, np.ones((1, 5)), 0, di_problem)
        belief = tube([out])[0]
        np.testing.assert_allclose(belief.mean, [-10.0, 0.25], atol=1e-12)
        np.testing.assert_allclose(belief.cov, np.diag([1e-20, 2.5e-4]), atol=1e-15)

    def test_noise_sigma_set_matches_covariance(self, di_problem):
        W = noise_sigma_set(di_problem, 4)
        np.testing.assert_array_equal(W.center, [0.0, 0.0])
        np.testing.assert_allclose(W.weights, sigma_weights(2, 2.0))
        cov = (W.points * W.weights) @ W.points.T
        np.testing.assert_allclose(cov, np.diag([1e-20, 2.5e-4]), rtol=1e-12, atol=1e-24)

    def test_zero_noise_is_a_deterministic_step(self):
        prob = build_double_integrator(DoubleIntegratorConfig(noise_diag=[0.0, 0.0]))
        X = initial_stacked_state(prob)
        out = propagate(X, np.full((1, 5), -0.4), 0, prob)
        expected = [-10.0, 0.25 * -0.4]
        np.testing.assert_allclose(out.points, np.tile(np.array(expected)[:, None], 5),
                                   atol=1e-15)

    def test_affine_dynamics_with_affine_policy(self, rng):
        cfg = DoubleIntegratorConfig(init_cov_diag=[0.3, 0.05])
        prob = build_double_integrator(cfg)
        A = np.array([[1.0, cfg.dt], [0.0, 1.0]])
        B = np.array([[0.0], [cfg.b]])
        R = np.diag(cfg.noise_diag)
        a, K = np.array([0.2]), rng.standard_normal((1, 2))
        X = initial_stacked_state(prob)
        mean, cov = prob.init.mean, prob.init.cov
        for k in range(5):
            U = a[:, None] + K @ (X.points - X.points[:, :1])
            X = propagate(X, U, k, prob)
            mean = A @ mean + B @ a
            cov = (A + B @ K) @ cov @ (A + B @ K).T + R
            belief = tube([X])[0]
            np.testing.assert_allclose(belief.mean, mean, rtol=1e-9)
            assert np.linalg.norm(belief.cov - cov) <= 1e-9 * np.linalg.norm(cov)

    def test_propagated_covariance_stays_psd(self, rng, problem_factory):
        def pendulum(x, u, w, k):
            return np.stack([x[..., 0] + 0.1 * x[..., 1],
                             x[..., 1] - 0.1 * np.sin(x[..., 0]) + 0.1 * u[..., 0]],
                            axis=-1) + w
        prob = problem_factory(nx=2, N=6, dynamics=pendulum, mean=[1.0, 0.0],
                               cov=np.diag([0.2, 0.1]), noise_cov=np.diag([1e-3, 1e-3]))
        Xs = rollout(prob, initial_stacked_state(prob), rng.standard_normal((6, 1, 5)))
        for g in tube(Xs):
            np.testing.assert_allclose(g.cov, g.cov.T, atol=1e-15)
            assert np.linalg.eigvalsh(g.cov)[0] >= -1e-12

    def test_non_finite_dynamics(self, problem_factory):
        prob = problem_factory(dynamics=_exploding, mean=[1.0])
        with np.errstate(all="ignore"), pytest.raises(DynamicsFailureError):
            propagate(initial_stacked_state(prob), np.zeros((1, 3)), 0, prob)


class TestExpectedCosts:

    def test_constant_stage_cost(self, problem_factory):
        prob = problem_factory(nx=2, stage_cost=_constant_cost, noise_cov=np.eye(2))
        X = initial_stacked_state(prob)
        assert expected_stage_cost(X, np.zeros((1, 5)), 0, prob) == pytest.approx(7.5)

    def test_control_norm_with_identical_columns(self, problem_factory):
        prob = problem_factory(nx=2, nu=2, stage_cost=_control_norm, cov=np.eye(2))
        U = np.tile(np.array([[3.0], [4.0]]), 5)
        X = initial_stacked_state(prob)
        assert expected_stage_cost(X, U, 0, prob) == pytest.approx(5.0, abs=1e-14)

    def test_trace_of_covariance(self, problem_factory):
        prob = problem_factory(nx=2, stage_cost=_sum_squares_state, cov=np.eye(2))
        X = initial_stacked_state(prob)
        assert expected_stage_cost(X, np.zeros((1, 5)), 0, prob) == pytest.approx(2.0)

    def test_terminal_cost_examples(self, problem_factory):
        prob = problem_factory(nx=2, terminal_cost=_sum_squares, cov=np.diag([1.0, 4.0]))
        assert expected_terminal_cost(initial_stacked_state(prob), prob) == pytest.approx(5.0)
        at_mean = problem_factory(nx=2, terminal_cost=_sum_squares)
        assert expected_terminal_cost(initial_stacked_state(at_mean), at_mean) == 0.0

    def test_total_objective_is_the_sum(self, problem_factory):
        prob = problem_factory(nx=2, N=2, stage_cost=_constant_cost,
                               terminal_cost=_sum_squares, cov=np.diag([1.0, 4.0]))
        X0 = initial_stacked_state(prob)
        Us = [np.zeros((1, 5))] * 2
        Xs = [X0, X0, X0]
        assert total_objective(Xs, Us, prob) == pytest.approx(7.5 + 7.5 + 5.0)
        with pytest.raises(ValueError):
            total_objective(Xs[:2], Us, prob)


class TestChanceConstraint:

    def test_zero_variance_cancels_epsilon(self, problem_factory):
        prob = problem_factory(nx=1, nu=2)
        U = np.tile(np.array([[0.3], [0.4]]), 3)
        assert chance_constraint_norm2(U, 2.0, prob) == pytest.approx(0.25 - 4.0, abs=1e-15)
        assert chance_constraint_norm2(np.zeros((2, 3)), 2.0, prob) == pytest.approx(-4.0, abs=1e-15)

    def test_hand_computed_dispersion(self, problem_factory):
        prob = problem_factory(nx=1)
        U = np.array([[0.5, 0.8, 0.2]])
        E, V = 0.28, 0.0318
        expected = E + 3.0 * np.sqrt(V + 1e-4) - 3.0 * 0.01 - 0.36
        assert chance_constraint_norm2(U, 0.6, prob) == pytest.approx(expected, abs=1e-12)

    def test_general_linear_constraint(self, problem_factory):
        prob = problem_factory(nx=1)
        C = chance_constraint_general(lambda u: u[..., 0], np.array([[0.0, 1.0, -1.0]]), prob)
        assert C == pytest.approx(3.0 * np.sqrt(1 / 3 + 1e-4) - 3.0 * 1e-2, abs=1e-14)

    def test_affine_constraint_identical_columns(self, problem_factory):
        prob = problem_factory(nx=2)
        C = chance_constraint_general(lambda u: 2.0 * u[..., 0] - 1.0,
                                      np.full((1, 5), 0.7), prob)
        assert C == pytest.approx(0.4, abs=1e-14)

    def test_general_reproduces_norm2(self, problem_factory, rng):
        prob = problem_factory(nx=2, nu=2)
        U = rng.standard_normal((2, 5))
        general = chance_constraint_general(
            lambda u: np.sum(u ** 2, axis=-1) - 1.5 ** 2, U, prob)
        assert general == chance_constraint_norm2(U, 1.5, prob)

    def test_monotone_in_zero_variance_slice(self, problem_factory):
        prob = problem_factory(nx=1)
        values = [chance_constraint_norm2(np.full((1, 3), u), 1.0, prob)
                  for u in np.linspace(0.0, 2.0, 21)]
        assert np.all(np.diff(values) > 0)

    def test_epsilon_consistency(self, problem_factory):
        U = np.full((1, 3), 0.9)
        values = [chance_constraint_norm2(U, 1.0, problem_factory(nx=1, epsilon_singularity=eps))
                  for eps in (1e-8, 1e-6, 1e-4, 1e-2)]
        np.testing.assert_allclose(values, 0.81 - 1.0, atol=1e-15)

    def test_bound_must_be_positive(self, problem_factory):
        with pytest.raises(ValueError):
            chance_constraint_norm2(np.zeros((1, 3)), 0.0, problem_factory())

    def test_non_finite_constraint(self, problem_factory):
        with pytest.raises(ConstraintFailureError):
            chance_constraint_general(lambda u: u[..., 0] * np.inf,
                                      np.ones((1, 3)), problem_factory())

    def test_analytic_jacobian_matches_differences(self, di_problem, rng):
        tr = Transcription(di_problem)
        u = 0.5 * rng.standard_normal(tr.ns)
        analytic = tr.constraint_jacobian(3, u)
        numeric = jacobian(lambda U: tr.constraint_flat(3, U), u)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-9)


class TestTranscribedProblem:

    def test_layout_round_trip(self, rng):
        P = rng.standard_normal((2, 5))
        flat = stack(P)
        np.testing.assert_array_equal(flat[:2], P[:, 0])
        np.testing.assert_array_equal(unstack(flat, 2), P)
        np.testing.assert_array_equal(replicate_controls(np.array([[1.0], [2.0]]), 3),
                                      [[1.0] * 3, [2.0] * 3])

    def test_deterministic_reduction(self, rng):
        prob = build_double_integrator(DoubleIntegratorConfig(
            noise_diag=[0.0, 0.0])).deterministic()
        point_ocp = transcribe_deterministic(prob)
        tr = Transcription(prob)
        stacked_ocp = tr.to_ocp()
        U = np.clip(rng.standard_normal((prob.N, 1)), -1.0, 1.0)
        X_point = DDPSolver(point_ocp).rollout(U)
        U_stacked = replicate_controls(U, tr.ns)
        X_stacked = DDPSolver(stacked_ocp).rollout(U_stacked)
        for k in range(prob.N + 1):
            np.testing.assert_allclose(unstack(X_stacked[k], 2),
                                       np.tile(X_point[k][:, None], tr.ns), atol=1e-12)
        assert stacked_ocp.cost(X_stacked, U_stacked) == pytest.approx(
            point_ocp.cost(X_point, U), rel=1e-12)

    def test_initial_stacked_state_and_weights(self, problem_factory):
        prob = problem_factory(nx=2, cov=np.eye(2), kappa_x=1.0)
        X0 = initial_stacked_state(prob)
        np.testing.assert_allclose(X0.weights, sigma_weights(2, 1.0))
        np.testing.assert_allclose(
            X0.points, make_sigma_set(GaussianState(mean=[0, 0], cov=np.eye(2)), 1.0).points)
        ocp = Transcription(prob).to_ocp()
        assert ocp.nx == 10 and ocp.nu == 5
        np.testing.assert_array_equal(ocp.x0, stack(X0.points))
