"""
Constrained differential dynamic programming on a deterministic OCP.

The solver is iLQR-flavoured: dynamics enter the backward pass through
first derivatives only (Gauss-Newton), cost Hessians are kept, and stage
inequality constraints C_k(u_k) <= 0 are folded into the stage costs with
an augmented Lagrangian.
"""
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple
import logging
import numpy as np
from models.IterationRecord import IterationRecord
from models.SolverOptions import SolverOptions
from models.SolverSolution import SolverSolution
from processing.exceptions import (TubeDDPError,
                                   DivergedError,
                                   RegularizationExhaustedError)
from processing.jacobians import (split_jacobian,
                                  jacobian,
                                  gradient_hessian)

logger = logging.getLogger(__name__)


class TranscribedOCP:
    """
    min Σ L_k(x_k, u_k) + Φ(x_N)  s.t.  x_{k+1} = F_k(x_k, u_k),
    C_k(u_k) <= 0,  x_0 fixed.

    Callables broadcast over a leading batch axis:
        dynamics(k, x (B, n), u (B, m)) -> (B, n)
        stage_cost(k, x (B, n), u (B, m)) -> (B,)
        terminal_cost(x (B, n)) -> (B,)
        constraint(k, u (B, m)) -> (B, nc)
    Optional analytic derivative hooks take single points:
        dynamics_jacobian(k, x, u) -> (F_x, F_u)
        stage_cost_derivatives(k, x, u) -> (l_x, l_u, l_xx, l_uu, l_ux)
        terminal_cost_derivatives(x) -> (Φ_x, Φ_xx)
        constraint_jacobian(k, u) -> (nc, m)
    `constraint_scale` (N,) divides C_k inside the solver so multipliers,
    penalties and tolerances see O(1) values whatever the units.
    """

    def __init__(self,
                 N: int,
                 x0: np.ndarray,
                 nu: int,
                 dynamics: Callable,
                 stage_cost: Callable,
                 terminal_cost: Callable,
                 constraint: Optional[Callable] = None,
                 n_constraints: int = 0,
                 dynamics_jacobian: Optional[Callable] = None,
                 stage_cost_derivatives: Optional[Callable] = None,
                 terminal_cost_derivatives: Optional[Callable] = None,
                 constraint_jacobian: Optional[Callable] = None,
                 constraint_scale: Optional[np.ndarray] = None,
                 label: str = "ocp"):
        if N < 1:
            raise ValueError(f"horizon must be >= 1, got {N}")
        if constraint is None:
            n_constraints = 0
        self.N = int(N)
        self.x0 = np.asarray(x0, dtype=float).reshape(-1)
        self.nx = self.x0.size
        self.nu = int(nu)
        self.dynamics = dynamics
        self.stage_cost = stage_cost
        self.terminal_cost = terminal_cost
        self.constraint = constraint
        self.n_constraints = int(n_constraints)
        self.dynamics_jacobian = dynamics_jacobian
        self.stage_cost_derivatives = stage_cost_derivatives
        self.terminal_cost_derivatives = terminal_cost_derivatives
        self.constraint_jacobian = constraint_jacobian
        scale = 1.0 if constraint_scale is None else constraint_scale
        self.constraint_scale = np.broadcast_to(
            np.asarray(scale, dtype=float), (self.N,)).copy()
        if np.any(self.constraint_scale <= 0):
            raise ValueError("constraint scales must be > 0")
        self.label = label

    def __repr__(self):
        return (f"TranscribedOCP(label={self.label}, N={self.N}, "
                f"nx={self.nx}, nu={self.nu}, nc={self.n_constraints})")

    def step(self, k: int, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.dynamics(k, x[None], u[None]))[0]

    def constraint_values(self, U: np.ndarray) -> np.ndarray:
        if not self.n_constraints:
            return np.zeros((U.shape[0], 0))
        return np.vstack([np.asarray(self.constraint(k, U[k][None]))[0]
                          for k in range(U.shape[0])])

    def cost(self, X: np.ndarray, U: np.ndarray) -> float:
        J = sum(float(np.asarray(self.stage_cost(k, X[k][None],
                                                 U[k][None]))[0])
                for k in range(self.N))
        return J + float(np.asarray(self.terminal_cost(X[-1][None]))[0])


class StageModel(NamedTuple):
    fx: np.ndarray
    fu: np.ndarray
    lx: np.ndarray
    lu: np.ndarray
    lxx: np.ndarray
    luu: np.ndarray
    lux: np.ndarray
    c: np.ndarray
    cu: np.ndarray


class BackwardPassResult(NamedTuple):
    feedforward: np.ndarray
    gains: np.ndarray
    dV1: float
    dV2: float
    reg: float

    def expected_decrease(self, step: float = 1.0) -> float:
        return -(step * self.dV1 + step ** 2 * self.dV2)


class Candidate(NamedTuple):
    states: np.ndarray
    controls: np.ndarray
    cost: float
    augmented_cost: float
    constraint_values: np.ndarray


def al_penalty(c: np.ndarray, lam: np.ndarray, rho: float) -> float:
    """Σ (max(0, λ + ρc)² − λ²) / 2ρ over all stage constraints."""
    if c.size == 0:
        return 0.0
    return float(np.sum(np.maximum(0.0, lam + rho * c) ** 2 - lam ** 2)
                 / (2.0 * rho))


def max_violation(c: np.ndarray) -> float:
    return float(np.maximum(c, 0.0).max(initial=0.0))


def augmented_lagrangian_update(multipliers: np.ndarray,
                                penalty: float,
                                constraint_values: np.ndarray,
                                opts: SolverOptions,
                                previous_violation: Optional[float] = None
                                ) -> Tuple[np.ndarray, float]:
    """
    First-order multiplier update λ ← max(0, λ + ρ·C); the penalty grows by
    `penalty_growth` (up to `penalty_max`) when the largest violation did
    not shrink by a factor 4 since the previous update.
    """
    if penalty <= 0:
        raise ValueError("penalty must be > 0")
    c = np.asarray(constraint_values, dtype=float)
    lam = np.clip(np.asarray(multipliers, dtype=float) + penalty * c,
                  0.0, opts.multiplier_max)
    violation = max_violation(c)
    if previous_violation is not None and violation > 0.25 * previous_violation:
        penalty = min(penalty * opts.penalty_growth, opts.penalty_max)
    return lam, penalty


class DDPSolver:
    """
    Augmented-Lagrangian iLQR for a TranscribedOCP.
    """

    def __init__(self,
                 ocp: TranscribedOCP,
                 opts: Optional[SolverOptions] = None):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.ocp = ocp
        self.opts = opts or SolverOptions()

    def __repr__(self):
        return f"DDPSolver(ocp={self.ocp!r})"

    # ───────────────────────────────────────────────────────────
    # Rollouts
    # ───────────────────────────────────────────────────────────

    def rollout(self, U: np.ndarray) -> np.ndarray:
        ocp = self.ocp
        X = np.empty((ocp.N + 1, ocp.nx))
        X[0] = ocp.x0
        for k in range(ocp.N):
            X[k + 1] = ocp.step(k, X[k], U[k])
        return X

    def _evaluate(self,
                  X: np.ndarray,
                  U: np.ndarray,
                  lam: np.ndarray,
                  rho: float) -> Candidate:
        c = self.ocp.constraint_values(U) / self.ocp.constraint_scale[:, None]
        J = self.ocp.cost(X, U)
        return Candidate(X, U, J, J + al_penalty(c, lam, rho), c)

    def forward_pass(self,
                     nominal: Candidate,
                     bp: BackwardPassResult,
                     step: float,
                     lam: np.ndarray,
                     rho: float) -> Candidate:
        """
        Closed-loop rollout u = ū + step·k + K(x − x̄). Any numerical
        failure along the way yields an infinite-cost candidate.
        """
        ocp = self.ocp
        X = np.empty_like(nominal.states)
        U = np.empty_like(nominal.controls)
        X[0] = nominal.states[0]
        try:
            with np.errstate(all="ignore"):
                for k in range(ocp.N):
                    U[k] = (nominal.controls[k]
                            + step * bp.feedforward[k]
                            + bp.gains[k] @ (X[k] - nominal.states[k]))
                    X[k + 1] = ocp.step(k, X[k], U[k])
                if not (np.all(np.isfinite(X)) and np.all(np.isfinite(U))):
                    raise ArithmeticError("non-finite rollout")
                return self._evaluate(X, U, lam, rho)
        except (TubeDDPError, ArithmeticError, np.linalg.LinAlgError) as e:
            self.logger.debug(f"Forward pass failed at step {step}: {e}")
            return Candidate(X, U, np.inf, np.inf,
                             np.full((ocp.N, ocp.n_constraints), np.inf))

    # ───────────────────────────────────────────────────────────
    # Derivatives
    # ───────────────────────────────────────────────────────────

    def linearize(self, X: np.ndarray, U: np.ndarray) -> List[StageModel]:
        ocp, opts = self.ocp, self.opts
        n = ocp.nx
        models = []
        for k in range(ocp.N):
            x, u = X[k], U[k]
            if ocp.dynamics_jacobian is not None:
                fx, fu = ocp.dynamics_jacobian(k, x, u)
            else:
                fx, fu = split_jacobian(
                    lambda Xb, Ub, k=k: ocp.dynamics(k, Xb, Ub),
                    x, u, opts.fd_rel_step)
            if ocp.stage_cost_derivatives is not None:
                lx, lu, lxx, luu, lux = ocp.stage_cost_derivatives(k, x, u)
            else:
                g, H = gradient_hessian(
                    lambda Z, k=k: ocp.stage_cost(k, Z[..., :n], Z[..., n:]),
                    np.concatenate([x, u]),
                    opts.fd_rel_step, opts.hessian_rel_step)
                lx, lu = g[:n], g[n:]
                lxx, luu, lux = H[:n, :n], H[n:, n:], H[n:, :n]
            if ocp.n_constraints:
                c = np.asarray(ocp.constraint(k, u[None]))[0]
                if ocp.constraint_jacobian is not None:
                    cu = ocp.constraint_jacobian(k, u)
                else:
                    cu = jacobian(lambda Ub, k=k: ocp.constraint(k, Ub),
                                  u, opts.fd_rel_step)
                c, cu = c / ocp.constraint_scale[k], cu / ocp.constraint_scale[k]
            else:
                c, cu = np.zeros(0), np.zeros((0, ocp.nu))
            models.append(StageModel(fx, fu, lx, lu, lxx, luu, lux, c, cu))
        return models

    def terminal_derivatives(self,
                             xN: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ocp, opts = self.ocp, self.opts
        if ocp.terminal_cost_derivatives is not None:
            return ocp.terminal_cost_derivatives(xN)
        return gradient_hessian(lambda Z: ocp.terminal_cost(Z), xN,
                                opts.fd_rel_step, opts.hessian_rel_step)

    def cost_gradient(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """
        Adjoint gradient dJ/dU (N, m) of the plain objective at (X, U).
        """
        models = self.linearize(X, U)
        adj, _ = self.terminal_derivatives(X[-1])
        grad = np.empty_like(U, dtype=float)
        for k in reversed(range(self.ocp.N)):
            m = models[k]
            grad[k] = m.lu + m.fu.T @ adj
            adj = m.lx + m.fx.T @ adj
        return grad

    # ───────────────────────────────────────────────────────────
    # Backward pass
    # ───────────────────────────────────────────────────────────

    def backward_pass(self,
                      X: np.ndarray,
                      U: np.ndarray,
                      reg: float,
                      lam: Optional[np.ndarray] = None,
                      rho: float = 1.0,
                      models: Optional[Sequence[StageModel]] = None
                      ) -> BackwardPassResult:
        """
        Quadratic value-function recursion from stage N to 0 with a
        Levenberg shift `reg` on the control Hessian; the shift is raised
        and the sweep restarted whenever Q_uu + reg·I is not positive
        definite.

        Raises:
            RegularizationExhaustedError: reg exceeded reg_max.
        """
        ocp, opts = self.ocp, self.opts
        if models is None:
            models = self.linearize(X, U)
        if lam is None:
            lam = np.zeros((ocp.N, ocp.n_constraints))
        Vx_N, Vxx_N = self.terminal_derivatives(X[-1])
        eye = np.eye(ocp.nu)
        while True:
            if reg > opts.reg_max:
                raise RegularizationExhaustedError(
                    f"regularization exceeded {opts.reg_max:g}")
            k_ff = np.zeros((ocp.N, ocp.nu))
            K = np.zeros((ocp.N, ocp.nu, ocp.nx))
            Vx, Vxx = Vx_N.copy(), Vxx_N.copy()
            dV1 = dV2 = 0.0
            try:
                for k in reversed(range(ocp.N)):
                    m = models[k]
                    lu, luu = m.lu, m.luu
                    if m.c.size:
                        mu = lam[k] + rho * m.c
                        active = mu > 0
                        if np.any(active):
                            cu = m.cu[active]
                            lu = lu + cu.T @ mu[active]
                            luu = luu + rho * cu.T @ cu
                    Qx = m.lx + m.fx.T @ Vx
                    Qu = lu + m.fu.T @ Vx
                    Qxx = m.lxx + m.fx.T @ Vxx @ m.fx
                    Quu = luu + m.fu.T @ Vxx @ m.fu
                    Qux = m.lux + m.fu.T @ Vxx @ m.fx
                    Quu = 0.5 * (Quu + Quu.T)
                    L = np.linalg.cholesky(Quu + reg * eye)
                    sol = np.linalg.solve(
                        L.T, np.linalg.solve(L, np.column_stack([Qu, Qux])))
                    k_ff[k] = -sol[:, 0]
                    K[k] = -sol[:, 1:]
                    dV1 += float(k_ff[k] @ Qu)
                    dV2 += float(0.5 * k_ff[k] @ Quu @ k_ff[k])
                    Vx = (Qx + K[k].T @ Quu @ k_ff[k] + K[k].T @ Qu
                          + Qux.T @ k_ff[k])
                    Vxx = (Qxx + K[k].T @ Quu @ K[k] + K[k].T @ Qux
                           + Qux.T @ K[k])
                    Vxx = 0.5 * (Vxx + Vxx.T)
            except np.linalg.LinAlgError:
                reg = max(reg * opts.reg_increase, opts.reg_min)
                self.logger.debug(f"Q_uu not PD, raising reg to {reg:.3e}")
                continue
            if not (np.all(np.isfinite(k_ff)) and np.all(np.isfinite(K))):
                reg = max(reg * opts.reg_increase, opts.reg_min)
                continue
            return BackwardPassResult(k_ff, K, dV1, dV2, reg)

    # ───────────────────────────────────────────────────────────
    # Main loop
    # ───────────────────────────────────────────────────────────

    def _line_search(self,
                     nominal: Candidate,
                     bp: BackwardPassResult,
                     lam: np.ndarray,
                     rho: float) -> Tuple[Optional[Candidate], float, float]:
        """Backtracking on the step; returns (candidate, step, decrease)."""
        opts = self.opts
        step = 1.0
        while step >= opts.min_step:
            cand = self.forward_pass(nominal, bp, step, lam, rho)
            actual = nominal.augmented_cost - cand.augmented_cost
            if (np.isfinite(cand.augmented_cost) and actual > 0
                    and actual > opts.accept_ratio * bp.expected_decrease(step)):
                return cand, step, actual
            step *= opts.backtrack
        return None, 0.0, 0.0

    def solve(self, init_controls: np.ndarray) -> SolverSolution:
        """
        Solve from an initial control sequence (N, m). Infeasible starts
        are fine: the multipliers and penalty drive feasibility.

        Each multiplier epoch runs iLQR on the augmented cost until the
        relative decrease falls below an epoch tolerance that starts at
        `inner_tolerance` and shrinks by `inner_tolerance_decay` per
        update, or until `max_inner_iters` iterations. Once feasible, the
        inner loop is finished at `cost_tolerance` before converging.

        Raises:
            DivergedError: the cost is not finite and cannot be recovered.
        """
        ocp, opts = self.ocp, self.opts
        U = np.array(init_controls, dtype=float).reshape(ocp.N, ocp.nu)
        if not np.all(np.isfinite(U)):
            raise ValueError("initial controls must be finite")
        lam = np.zeros((ocp.N, ocp.n_constraints))
        rho = opts.penalty_init
        try:
            X = self.rollout(U)
        except (TubeDDPError, ArithmeticError) as e:
            raise DivergedError(f"initial rollout failed: {e}") from e
        nominal = self._evaluate(X, U, lam, rho)
        if not np.isfinite(nominal.augmented_cost):
            raise DivergedError("initial cost is not finite")

        self.logger.info(f"Solving {ocp!r}: J0={nominal.cost:.6e}, "
                         f"violation={max_violation(nominal.constraint_values):.3e}")
        reg = opts.reg_init
        inner_tol = max(opts.inner_tolerance, opts.cost_tolerance)
        inner_iters = 0
        log: List[IterationRecord] = []
        epoch = 0
        previous_violation: Optional[float] = None
        bp: Optional[BackwardPassResult] = None
        models: Optional[List[StageModel]] = None
        converged = False
        status = "max_iters"

        for it in range(1, opts.max_iters + 1):
            inner_iters += 1
            # "tight": no decrease left at cost_tolerance; "stall": no step found
            ending = None
            step_taken = 0.0
            accepted = False
            try:
                if models is None:
                    models = self.linearize(nominal.states, nominal.controls)
                bp = self.backward_pass(nominal.states, nominal.controls,
                                        reg, lam, rho, models)
                reg = bp.reg
            except RegularizationExhaustedError:
                self.logger.warning("Regularization exhausted; "
                                    "treating inner loop as stalled")
                reg = opts.reg_max
                ending = "stall"
                bp = None

            scale = max(1.0, abs(nominal.augmented_cost))
            if bp is not None:
                expected = bp.expected_decrease()
                if expected < opts.cost_tolerance * scale:
                    ending = "tight"
                elif expected < inner_tol * scale:
                    ending = "loose"
                else:
                    cand, step, actual = self._line_search(nominal, bp, lam, rho)
                    if cand is not None:
                        nominal, models = cand, None
                        accepted, step_taken = True, step
                        reg = max(reg / opts.reg_decrease, opts.reg_min)
                        if actual < opts.cost_tolerance * scale:
                            ending = "tight"
                        elif actual < inner_tol * scale:
                            ending = "loose"
                    else:
                        reg *= opts.reg_increase
                        if reg > opts.reg_max:
                            ending = "stall"
            if ending is None and inner_iters >= opts.max_inner_iters:
                ending = "capped"

            violation = max_violation(nominal.constraint_values)
            log.append(IterationRecord(iteration=it,
                                       epoch=epoch,
                                       cost=nominal.cost,
                                       augmented_cost=nominal.augmented_cost,
                                       violation=violation,
                                       reg=reg,
                                       step=step_taken,
                                       accepted=accepted))
            self.logger.debug(f"it={it} J={nominal.cost:.10e} "
                              f"Jaug={nominal.augmented_cost:.10e} "
                              f"viol={violation:.3e} reg={reg:.1e} "
                              f"step={step_taken:.4f}")
            if ending is None:
                continue
            inner_iters = 0
            if violation <= opts.constraint_tolerance:
                if ending in ("tight", "stall"):
                    converged = True
                    status = "converged"
                    break
                # feasible: finish the inner loop on the final tolerance
                inner_tol = opts.cost_tolerance
                continue
            if epoch >= opts.max_al_updates:
                status = "max_al_updates"
                break
            lam, rho = augmented_lagrangian_update(
                lam, rho, nominal.constraint_values, opts, previous_violation)
            previous_violation = violation
            epoch += 1
            inner_tol = max(opts.cost_tolerance,
                            inner_tol * opts.inner_tolerance_decay)
            if reg >= opts.reg_max:
                reg = opts.reg_init
            nominal = self._evaluate(nominal.states, nominal.controls,
                                     lam, rho)
            self.logger.debug(f"AL update {epoch}: viol={violation:.3e}, "
                              f"rho={rho:.1e}, max λ={lam.max(initial=0):.3e}")

        if status == "max_iters":
            self.logger.warning(f"Reached max_iters={opts.max_iters} "
                                f"(violation "
                                f"{max_violation(nominal.constraint_values):.3e})")
        try:
            bp = self.backward_pass(nominal.states, nominal.controls,
                                    max(reg, opts.reg_min), lam, rho, models)
        except RegularizationExhaustedError:
            if bp is None:
                bp = BackwardPassResult(np.zeros((ocp.N, ocp.nu)),
                                        np.zeros((ocp.N, ocp.nu, ocp.nx)),
                                        0.0, 0.0, reg)
        self.logger.info(f"Finished {ocp.label}: status={status}, "
                         f"J={nominal.cost:.8e}, iterations={len(log)}")
        scale = ocp.constraint_scale[:, None]
        C = nominal.constraint_values * scale
        return SolverSolution(
            states=nominal.states,
            controls=nominal.controls,
            feedforward=bp.feedforward,
            gains=bp.gains,
            cost=nominal.cost,
            augmented_cost=nominal.augmented_cost,
            constraint_values=C,
            multipliers=lam / scale,
            penalty=rho,
            max_violation=max_violation(C),
            iterations=log,
            converged=converged,
            status=status)


def solve(ocp: TranscribedOCP,
          init_controls: np.ndarray,
          opts: Optional[SolverOptions] = None) -> SolverSolution:
    return DDPSolver(ocp, opts).solve(init_controls)
