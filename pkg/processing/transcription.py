"""
Unscented transcription of a StochasticProblem into a deterministic OCP.

The solver state is the stacked sigma set X_k (nx × (2nx+1)) flattened
point-major, i.e. flat = X.T.ravel(); controls likewise (nu × (2nx+1)).
Internally everything is handled in row form (..., ns, n) so one call can
carry a whole batch of perturbed trajectories for finite differencing.
"""
from typing import Callable, List, Optional, Sequence, Tuple
import logging
import numpy as np
from scipy.linalg import block_diag
from models.GaussianState import GaussianState
from models.SigmaSet import SigmaSet
from models.SolverOptions import SolverOptions
from models.StochasticProblem import StochasticProblem
from processing.ddp_solver import TranscribedOCP
from processing.exceptions import (DynamicsFailureError,
                                   CostFailureError,
                                   ConstraintFailureError)
from processing.gaussian_core import (make_sigma_set,
                                      psd_sqrt_batch,
                                      sigma_weights,
                                      weighted_moments)
from processing.jacobians import gradient, gradient_hessian, split_jacobian

logger = logging.getLogger(__name__)


# ───────────────────────────────────────────────────────────────
# Layout helpers
# ───────────────────────────────────────────────────────────────

def stack(points: np.ndarray) -> np.ndarray:
    """(n, ns) sigma matrix -> flat point-major vector."""
    return np.asarray(points, dtype=float).T.ravel()


def unstack(flat: np.ndarray, n: int) -> np.ndarray:
    """Flat point-major vector -> (n, ns) sigma matrix."""
    flat = np.asarray(flat, dtype=float)
    return flat.reshape(-1, n).T


def replicate_controls(controls: np.ndarray, ns: int) -> np.ndarray:
    """Copy a point control sequence (N, nu) onto all ns sigma columns."""
    return np.tile(np.asarray(controls, dtype=float), (1, ns))


def _broadcast_pairs(x: np.ndarray,
                     u: np.ndarray,
                     w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    lead = np.broadcast_shapes(x.shape[:-1], u.shape[:-1], w.shape[:-1])
    return (np.broadcast_to(x, lead + x.shape[-1:]),
            np.broadcast_to(u, lead + u.shape[-1:]),
            np.broadcast_to(w, lead + w.shape[-1:]))


def _chance(values: np.ndarray,
            weights: np.ndarray,
            multiplier: float,
            eps: float) -> np.ndarray:
    """E + q(√(V+ε) − √ε) over the last axis of `values`."""
    E = values @ weights
    V = ((values - E[..., None]) ** 2) @ weights
    return E + multiplier * (np.sqrt(V + eps) - np.sqrt(eps))


def _chance_sensitivity(values: np.ndarray,
                        weights: np.ndarray,
                        multiplier: float,
                        eps: float) -> np.ndarray:
    """dC/dc_i for the chance-constraint surrogate."""
    E = values @ weights
    V = ((values - E) ** 2) @ weights
    return weights * (1.0 + multiplier * (values - E) / np.sqrt(V + eps))


# ───────────────────────────────────────────────────────────────
# Sigma sets
# ───────────────────────────────────────────────────────────────

def noise_sigma_set(prob: StochasticProblem, k: int) -> SigmaSet:
    """Sigma set W_k of N(0, R_k)."""
    return make_sigma_set(GaussianState.zero_mean(prob.noise_cov[k]),
                          prob.kappa_w)


def initial_stacked_state(prob: StochasticProblem) -> SigmaSet:
    return make_sigma_set(prob.init, prob.kappa_x)


class Transcription:
    """
    Batched stage maps of the transcribed problem for one StochasticProblem.
    """

    def __init__(self, prob: StochasticProblem, jitter: float = 0.0):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.prob = prob
        self.jitter = jitter
        self.nx, self.nu = prob.nx, prob.nu
        self.ns = 2 * prob.nx + 1
        self.wx = sigma_weights(prob.nx, prob.kappa_x)
        self.noise = [noise_sigma_set(prob, k) for k in range(prob.N)]

    def __repr__(self):
        return (f"Transcription(problem={self.prob.name}, N={self.prob.N}, "
                f"stacked=({self.ns * self.nx}, {self.ns * self.nu}))")

    def _pair_weights(self, k: int) -> np.ndarray:
        return self.wx[:, None] * self.noise[k].weights[None, :]

    def _pairs(self, X: np.ndarray, U: np.ndarray, k: int):
        W = self.noise[k].points.T
        return _broadcast_pairs(X[..., :, None, :], U[..., :, None, :], W)

    # ─── dynamics ──────────────────────────────────────────────

    def propagate_moments(self,
                          X: np.ndarray,
                          U: np.ndarray,
                          k: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Mean (..., nx) and covariance (..., nx, nx) of x_{k+1} from the
        (2nx+1)(2nw+1) state/noise sigma pairs.
        """
        x, u, w = self._pairs(X, U, k)
        Y = np.asarray(self.prob.dynamics(x, u, w, self.prob.stage(k)),
                       dtype=float)
        if not np.all(np.isfinite(Y)):
            raise DynamicsFailureError(f"non-finite dynamics at stage {k}")
        c = self._pair_weights(k)
        mean = np.einsum("ij,...ijn->...n", c, Y)
        D = Y - mean[..., None, None, :]
        cov = np.einsum("ij,...ijn,...ijm->...nm", c, D, D)
        return mean, 0.5 * (cov + np.swapaxes(cov, -1, -2))

    def propagate_rows(self,
                       X: np.ndarray,
                       U: np.ndarray,
                       k: int,
                       jitter: Optional[float] = None) -> np.ndarray:
        """Resampled sigma rows (..., ns, nx) of stage k+1."""
        mean, cov = self.propagate_moments(X, U, k)
        S = psd_sqrt_batch((self.nx + self.prob.kappa_x) * cov,
                           self.jitter if jitter is None else jitter)
        m = mean[..., None, :]
        S = np.swapaxes(S, -1, -2)
        return np.concatenate([m, m + S, m - S], axis=-2)

    def dynamics_flat(self, k: int, X: np.ndarray, U: np.ndarray,
                      jitter: Optional[float] = None) -> np.ndarray:
        lead = X.shape[:-1]
        rows = self.propagate_rows(X.reshape(lead + (self.ns, self.nx)),
                                   U.reshape(lead + (self.ns, self.nu)),
                                   k, jitter)
        return rows.reshape(lead + (self.ns * self.nx,))

    # ─── costs ─────────────────────────────────────────────────

    def _point_stage_cost(self, k: int) -> Callable:
        """Σ_j c_w^j l(x, u, W_j) for points z = [x, u] (..., nx+nu)."""
        W = self.noise[k].points.T
        ww = self.noise[k].weights
        nx = self.nx

        def cost(z):
            x, u, w = _broadcast_pairs(z[..., None, :nx], z[..., None, nx:], W)
            return np.asarray(self.prob.stage_cost(x, u, w, self.prob.stage(k)),
                              dtype=float) @ ww
        return cost

    def stage_cost_rows(self, X: np.ndarray, U: np.ndarray, k: int) -> np.ndarray:
        x, u, w = self._pairs(X, U, k)
        vals = np.asarray(self.prob.stage_cost(x, u, w, self.prob.stage(k)),
                          dtype=float)
        L = np.einsum("ij,...ij->...", self._pair_weights(k), vals)
        if not np.all(np.isfinite(L)):
            raise CostFailureError(f"non-finite stage cost at stage {k}")
        return L

    def terminal_cost_rows(self, X: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.prob.terminal_cost(X), dtype=float) @ self.wx
        if not np.all(np.isfinite(vals)):
            raise CostFailureError("non-finite terminal cost")
        return vals

    def stage_cost_flat(self, k, X, U):
        lead = X.shape[:-1]
        return self.stage_cost_rows(X.reshape(lead + (self.ns, self.nx)),
                                    U.reshape(lead + (self.ns, self.nu)), k)

    def terminal_cost_flat(self, X):
        return self.terminal_cost_rows(
            X.reshape(X.shape[:-1] + (self.ns, self.nx)))

    def stage_cost_derivatives(self, k: int, x: np.ndarray, u: np.ndarray):
        """
        Block-diagonal derivatives of L_k at one stacked point: each sigma
        point contributes only to its own (x_i, u_i) block.
        """
        X = x.reshape(self.ns, self.nx)
        U = u.reshape(self.ns, self.nu)
        if self.prob.stage_cost_derivatives is not None:
            lx, lu, lxx, luu, lux = self.prob.stage_cost_derivatives(
                X, U, self.prob.stage(k))
        else:
            g, H = gradient_hessian(self._point_stage_cost(k),
                                    np.concatenate([X, U], axis=-1))
            n = self.nx
            lx, lu = g[:, :n], g[:, n:]
            lxx, luu, lux = H[:, :n, :n], H[:, n:, n:], H[:, n:, :n]
        c = self.wx
        return ((c[:, None] * lx).ravel(),
                (c[:, None] * lu).ravel(),
                block_diag(*(c[:, None, None] * lxx)),
                block_diag(*(c[:, None, None] * luu)),
                block_diag(*(c[:, None, None] * lux)))

    def terminal_cost_derivatives(self, x: np.ndarray):
        X = x.reshape(self.ns, self.nx)
        if self.prob.terminal_cost_derivatives is not None:
            gx, gxx = self.prob.terminal_cost_derivatives(X)
        else:
            gx, gxx = gradient_hessian(self.prob.terminal_cost, X)
        c = self.wx
        return ((c[:, None] * gx).ravel(),
                block_diag(*(c[:, None, None] * gxx)))

    # ─── constraint ────────────────────────────────────────────

    def _constraint_values(self, U: np.ndarray, k: int) -> np.ndarray:
        """c(U_i) per sigma column, (..., ns)."""
        if self.prob.control_bound is not None:
            b = self.prob.control_bound[k]
            vals = np.sum(U ** 2, axis=-1) - b ** 2
        else:
            vals = np.asarray(self.prob.control_constraint(U), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ConstraintFailureError(f"non-finite constraint at stage {k}")
        return vals

    def constraint_rows(self, U: np.ndarray, k: int) -> np.ndarray:
        return _chance(self._constraint_values(U, k), self.wx,
                       self.prob.multiplier, self.prob.epsilon_singularity)

    def constraint_flat(self, k, U):
        C = self.constraint_rows(U.reshape(U.shape[:-1] + (self.ns, self.nu)), k)
        return C[..., None]

    def constraint_jacobian(self, k: int, u: np.ndarray) -> np.ndarray:
        """dC_k/dU (1, ns·nu) at one stacked control."""
        U = u.reshape(self.ns, self.nu)
        vals = self._constraint_values(U, k)
        dC = _chance_sensitivity(vals, self.wx, self.prob.multiplier,
                                 self.prob.epsilon_singularity)
        if self.prob.control_bound is not None:
            dc = 2.0 * U
        else:
            dc = gradient(self.prob.control_constraint, U)
        return (dC[:, None] * dc).reshape(1, -1)

    # ─── OCP ───────────────────────────────────────────────────

    def to_ocp(self, opts: Optional[SolverOptions] = None) -> TranscribedOCP:
        opts = opts or SolverOptions()

        def dynamics_jacobian(k, x, u):
            return split_jacobian(
                lambda Xb, Ub: self.dynamics_flat(k, Xb, Ub, opts.sqrt_jitter),
                x, u, opts.fd_rel_step)

        X0 = initial_stacked_state(self.prob)
        return TranscribedOCP(
            N=self.prob.N,
            x0=stack(X0.points),
            nu=self.ns * self.nu,
            dynamics=self.dynamics_flat,
            stage_cost=self.stage_cost_flat,
            terminal_cost=self.terminal_cost_flat,
            constraint=self.constraint_flat if self.prob.has_constraint else None,
            n_constraints=1,
            dynamics_jacobian=dynamics_jacobian,
            stage_cost_derivatives=self.stage_cost_derivatives,
            terminal_cost_derivatives=self.terminal_cost_derivatives,
            constraint_jacobian=self.constraint_jacobian,
            constraint_scale=self.prob.constraint_scale,
            label=f"tsddp:{self.prob.name}")


def transcribe(prob: StochasticProblem,
               opts: Optional[SolverOptions] = None) -> TranscribedOCP:
    """Deterministic OCP over stacked sigma states of `prob`."""
    return Transcription(prob).to_ocp(opts)


def transcribe_deterministic(prob: StochasticProblem) -> TranscribedOCP:
    """
    Noise-free point problem x_{k+1} = f(x, u, 0) with the plain control
    constraint c(u) <= 0 (or ‖u‖² − b_k² <= 0).
    """
    nx, nw = prob.nx, prob.nw

    def w0(x):
        return np.zeros(x.shape[:-1] + (nw,))

    def dynamics(k, x, u):
        return prob.dynamics(x, u, w0(x), prob.stage(k))

    def stage_cost(k, x, u):
        return prob.stage_cost(x, u, w0(x), prob.stage(k))

    def constraint(k, u):
        if prob.control_bound is not None:
            return (np.sum(u ** 2, axis=-1) - prob.control_bound[k] ** 2)[..., None]
        return np.asarray(prob.control_constraint(u), dtype=float)[..., None]

    def constraint_jacobian(k, u):
        if prob.control_bound is not None:
            return 2.0 * u[None, :]
        return gradient(prob.control_constraint, u)[None, :]

    dynamics_jacobian = None
    if prob.dynamics_jacobian is not None:
        def dynamics_jacobian(k, x, u):
            fx, fu = prob.dynamics_jacobian(x[None], u[None], prob.stage(k))
            return fx[0], fu[0]

    stage_derivatives = None
    if prob.stage_cost_derivatives is not None:
        def stage_derivatives(k, x, u):
            return tuple(d[0] for d in prob.stage_cost_derivatives(
                x[None], u[None], prob.stage(k)))

    terminal_derivatives = None
    if prob.terminal_cost_derivatives is not None:
        def terminal_derivatives(x):
            return tuple(d[0] for d in prob.terminal_cost_derivatives(x[None]))

    return TranscribedOCP(
        N=prob.N,
        x0=prob.init.mean,
        nu=prob.nu,
        dynamics=dynamics,
        stage_cost=stage_cost,
        terminal_cost=prob.terminal_cost,
        constraint=constraint if prob.has_constraint else None,
        n_constraints=1,
        dynamics_jacobian=dynamics_jacobian,
        stage_cost_derivatives=stage_derivatives,
        terminal_cost_derivatives=terminal_derivatives,
        constraint_jacobian=constraint_jacobian,
        constraint_scale=prob.constraint_scale,
        label=f"ddp:{prob.name}")


# ───────────────────────────────────────────────────────────────
# Public sigma-set level operations
# ───────────────────────────────────────────────────────────────

def propagate(X: SigmaSet,
              U: np.ndarray,
              k: int,
              prob: StochasticProblem) -> SigmaSet:
    """
    Push the stacked state X_k through f_k under stacked controls U_k
    (nu × (2nx+1)) and resample 2nx+1 points from the propagated Gaussian.

    Raises:
        DynamicsFailureError: f_k returned a non-finite value.
    """
    if not 0 <= k < prob.N:
        raise ValueError(f"stage {k} outside [0, {prob.N})")
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if X.points.shape != (prob.nx, 2 * prob.nx + 1) or U.shape != (prob.nu, X.size):
        raise ValueError(f"inconsistent shapes {X.points.shape} / {U.shape}")
    rows = Transcription(prob).propagate_rows(X.points.T, U.T, k)
    return SigmaSet(points=rows.T, weights=X.weights, kappa=X.kappa)


def expected_stage_cost(X: SigmaSet,
                        U: np.ndarray,
                        k: int,
                        prob: StochasticProblem) -> float:
    """L_k = Σ_i Σ_j c_x^i c_w^j l(X_i, U_i, W_j)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    return float(Transcription(prob).stage_cost_rows(X.points.T, U.T, k))


def expected_terminal_cost(X: SigmaSet, prob: StochasticProblem) -> float:
    vals = np.asarray(prob.terminal_cost(X.points.T), dtype=float)
    out = float(vals @ X.weights)
    if not np.isfinite(out):
        raise CostFailureError("non-finite terminal cost")
    return out


def total_objective(Xs: Sequence[SigmaSet],
                    Us: Sequence[np.ndarray],
                    prob: StochasticProblem) -> float:
    if len(Xs) != len(Us) + 1:
        raise ValueError(f"need N+1 states and N controls, got "
                         f"{len(Xs)} and {len(Us)}")
    tr = Transcription(prob)
    J = sum(float(tr.stage_cost_rows(X.points.T,
                                     np.atleast_2d(np.asarray(U, dtype=float)).T,
                                     k))
            for k, (X, U) in enumerate(zip(Xs[:-1], Us)))
    return J + expected_terminal_cost(Xs[-1], prob)


def chance_constraint_general(c: Callable[[np.ndarray], np.ndarray],
                              U: np.ndarray,
                              prob: StochasticProblem) -> float:
    """
    E[c] + q√(V[c]+ε) − q√ε with E, V the weighted sigma moments of c
    over the control columns of U (nu × (2nx+1)).

    Raises:
        ConstraintFailureError: c returned a non-finite value.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    vals = np.asarray(c(U.T), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ConstraintFailureError("non-finite constraint value")
    w = sigma_weights(prob.nx, prob.kappa_x)
    return float(_chance(vals, w, prob.multiplier, prob.epsilon_singularity))


def chance_constraint_norm2(U: np.ndarray,
                            u_ub: float,
                            prob: StochasticProblem) -> float:
    """Chance-constrained ‖u‖ <= u_ub; satisfied iff the result is <= 0."""
    if u_ub <= 0:
        raise ValueError(f"u_ub must be > 0, got {u_ub}")
    return chance_constraint_general(
        lambda u: np.sum(u ** 2, axis=-1) - u_ub ** 2, U, prob)


def rollout(prob: StochasticProblem,
            X0: SigmaSet,
            Us: Sequence[np.ndarray]) -> List[SigmaSet]:
    """Stacked states X_0..X_N under stacked controls U_0..U_{N-1}."""
    tr = Transcription(prob)
    rows = X0.points.T
    Xs = [X0]
    for k, U in enumerate(Us):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        rows = tr.propagate_rows(rows, U.T, k)
        Xs.append(SigmaSet(points=rows.T, weights=X0.weights, kappa=X0.kappa))
    return Xs


def tube(Xs: Sequence[SigmaSet]) -> List[GaussianState]:
    """Per-stage beliefs N(x̄_k, P_k) represented by the stacked states."""
    out = []
    for X in Xs:
        mean, cov = weighted_moments(X.points, X.weights)
        out.append(GaussianState(mean=mean, cov=cov))
    return out


def solution_sigma_sets(prob: StochasticProblem,
                        states: np.ndarray,
                        controls: np.ndarray) -> Tuple[List[SigmaSet], List[np.ndarray]]:
    """
    Split flat solver trajectories (N+1, ns·nx) / (N, ns·nu) into sigma
    sets and (nu × ns) control matrices.
    """
    w = sigma_weights(prob.nx, prob.kappa_x)
    Xs = [SigmaSet(points=unstack(x, prob.nx), weights=w, kappa=prob.kappa_x)
          for x in states]
    Us = [unstack(u, prob.nu) for u in controls]
    return Xs, Us
