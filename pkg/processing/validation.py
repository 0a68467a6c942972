"""
Built-in numerical oracle suite run by the `validate` command.
"""
from typing import List, NamedTuple, Optional
import logging
import numpy as np
from models.CheckResult import CheckResult
from models.GaussianState import GaussianState
from models.LowThrustConfig import LowThrustConfig
from models.SolverOptions import SolverOptions
from processing.ddp_solver import DDPSolver, TranscribedOCP
from processing.gaussian_core import sigma_weights, unscented_transform
from processing.problems import (duty_cycle_margin,
                                 angular_momentum,
                                 low_thrust_step,
                                 scaled_constants,
                                 scale,
                                 specific_energy)

logger = logging.getLogger(__name__)

UT_AFFINE_RTOL = 1e-10
UT_MC_SAMPLES = 1_000_000
UT_MC_STD_ERRORS = 4.0
RICCATI_RTOL = 1e-6
ENERGY_RTOL = 1e-8
ENERGY_SUBSTEPS = 8
REFERENCE_DUTY = 0.81


def _perturbed_weights(n: int, kappa: float) -> np.ndarray:
    w = sigma_weights(n, kappa)
    w[0] += 1e-3
    w[1] -= 1e-3
    return w


def random_psd(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return A @ A.T


# ───────────────────────────────────────────────────────────────
# Unscented transform
# ───────────────────────────────────────────────────────────────

def check_ut_affine(rng: np.random.Generator,
                    trials: int = 100,
                    perturb_weights: bool = False) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        p = int(rng.integers(1, 7))
        A = rng.standard_normal((p, n))
        b = rng.standard_normal(p)
        g = GaussianState(mean=rng.standard_normal(n), cov=random_psd(rng, n))
        kappa = float(rng.uniform(0.5, 3.0))
        w = _perturbed_weights(n, kappa) if perturb_weights else None
        out = unscented_transform(lambda x: A @ x + b, g, kappa, weights=w)
        mean, cov = A @ g.mean + b, A @ g.cov @ A.T
        err_m = np.linalg.norm(out.mean - mean) / max(np.linalg.norm(mean), 1.0)
        err_c = np.linalg.norm(out.cov - cov) / max(np.linalg.norm(cov), 1e-300)
        worst = max(worst, err_m, err_c)
    return CheckResult(name="ut_affine_exactness", passed=bool(worst <= UT_AFFINE_RTOL),
                       error=worst, tolerance=UT_AFFINE_RTOL,
                       detail=f"{trials} random affine maps, n <= 6")


def check_ut_vs_monte_carlo(rng: np.random.Generator,
                            functions: int = 10,
                            samples: int = UT_MC_SAMPLES,
                            perturb_weights: bool = False) -> CheckResult:
    """UT mean of random quadratics of N(0, I₂) against sampled means."""
    g = GaussianState(mean=np.zeros(2), cov=np.eye(2))
    Z = rng.standard_normal((samples, 2))
    worst = 0.0
    for _ in range(functions):
        Q = rng.standard_normal((2, 2))
        Q = 0.5 * (Q + Q.T)
        b = rng.standard_normal(2)
        c = float(rng.standard_normal())

        def f(x):
            return np.atleast_1d(x @ Q @ x + b @ x + c)

        w = _perturbed_weights(2, 2.0) if perturb_weights else None
        ut = float(unscented_transform(f, g, 2.0, weights=w).mean[0])
        vals = np.einsum("si,ij,sj->s", Z, Q, Z) + Z @ b + c
        se = vals.std(ddof=1) / np.sqrt(samples)
        worst = max(worst, abs(ut - vals.mean()) / se)
    return CheckResult(name="ut_vs_monte_carlo", passed=bool(worst <= UT_MC_STD_ERRORS),
                       error=worst, tolerance=UT_MC_STD_ERRORS,
                       detail=f"{functions} quadratics, {samples} samples, "
                              f"error in standard errors")


# ───────────────────────────────────────────────────────────────
# Riccati
# ───────────────────────────────────────────────────────────────

class LQProblem(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    Qf: np.ndarray
    x0: np.ndarray
    N: int

    def ocp(self) -> TranscribedOCP:
        A, B, Q, R, Qf = self.A, self.B, self.Q, self.R, self.Qf
        n, m = B.shape

        def dynamics(k, x, u):
            return x @ A.T + u @ B.T

        def stage_cost(k, x, u):
            return 0.5 * (np.einsum("...i,ij,...j->...", x, Q, x)
                          + np.einsum("...i,ij,...j->...", u, R, u))

        def terminal_cost(x):
            return 0.5 * np.einsum("...i,ij,...j->...", x, Qf, x)

        return TranscribedOCP(
            N=self.N, x0=self.x0, nu=m,
            dynamics=dynamics, stage_cost=stage_cost, terminal_cost=terminal_cost,
            dynamics_jacobian=lambda k, x, u: (A, B),
            stage_cost_derivatives=lambda k, x, u: (Q @ x, R @ u, Q, R,
                                                    np.zeros((m, n))),
            terminal_cost_derivatives=lambda x: (Qf @ x, Qf),
            label="lq")


def random_lq_problem(rng: np.random.Generator,
                      nx: int,
                      nu: int,
                      N: int) -> LQProblem:
    A = rng.standard_normal((nx, nx))
    A *= 0.95 / max(np.abs(np.linalg.eigvals(A)).max(), 1e-12)
    B = rng.standard_normal((nx, nu))
    Q = random_psd(rng, nx) / nx
    R = random_psd(rng, nu) / nu + np.eye(nu)
    Qf = random_psd(rng, nx) / nx
    return LQProblem(A, B, Q, R, Qf, rng.standard_normal(nx), N)


def riccati_solution(lq: LQProblem):
    """Optimal (controls (N, m), gains (N, m, n), cost) by backward Riccati."""
    P = lq.Qf
    gains = []
    for _ in range(lq.N):
        S = lq.R + lq.B.T @ P @ lq.B
        K = np.linalg.solve(S, lq.B.T @ P @ lq.A)
        P = lq.Q + lq.A.T @ P @ (lq.A - lq.B @ K)
        P = 0.5 * (P + P.T)
        gains.append(K)
    gains = np.array(gains[::-1])
    x = lq.x0
    U = []
    for K in gains:
        u = -K @ x
        U.append(u)
        x = lq.A @ x + lq.B @ u
    return np.array(U), gains, 0.5 * float(lq.x0 @ P @ lq.x0)


def check_riccati(rng: np.random.Generator,
                  problems: int = 20,
                  max_nx: int = 40,
                  max_N: int = 50) -> CheckResult:
    worst = 0.0
    for _ in range(problems):
        nx = int(rng.integers(2, max_nx + 1))
        nu = int(rng.integers(1, min(nx, 8) + 1))
        N = int(rng.integers(5, max_N + 1))
        lq = random_lq_problem(rng, nx, nu, N)
        U_ref, _, J_ref = riccati_solution(lq)
        sol = DDPSolver(lq.ocp(), SolverOptions(max_iters=50)).solve(
            np.zeros((N, nu)))
        err_u = np.abs(sol.controls - U_ref).max() / max(np.abs(U_ref).max(), 1e-12)
        err_J = abs(sol.cost - J_ref) / max(abs(J_ref), 1e-12)
        worst = max(worst, err_u, err_J)
    return CheckResult(name="ddp_riccati_equivalence", passed=bool(worst <= RICCATI_RTOL),
                       error=worst, tolerance=RICCATI_RTOL,
                       detail=f"{problems} random LQ problems, nx <= {max_nx}")


# ───────────────────────────────────────────────────────────────
# Two-body and duty cycle
# ───────────────────────────────────────────────────────────────

def check_energy(cfg: Optional[LowThrustConfig] = None) -> CheckResult:
    """Ballistic propagation over the whole transfer from the Earth state."""
    cfg = (cfg or LowThrustConfig()).model_copy(update={"substeps": ENERGY_SUBSTEPS})
    c = scaled_constants(cfg)
    x = scale(cfg.r_earth + cfg.v_earth, "state", cfg)
    e0, h0 = specific_energy(x, c.gm), angular_momentum(x)
    worst = drift_h = 0.0
    for k in range(cfg.N):
        x = low_thrust_step(x, np.zeros(2), np.zeros(4), k, c)
        worst = max(worst, abs(specific_energy(x, c.gm) - e0) / abs(e0))
        drift_h = max(drift_h, abs(angular_momentum(x) - h0) / abs(h0))
    return CheckResult(name="two_body_energy", passed=bool(worst <= ENERGY_RTOL),
                       error=worst, tolerance=ENERGY_RTOL,
                       detail=f"RK4, {cfg.N} stages x {ENERGY_SUBSTEPS} substeps, "
                              f"angular momentum drift {drift_h:.1e}")


def check_duty_cycle() -> CheckResult:
    d = duty_cycle_margin(0.25, 2.5e-4)
    err = abs(float(f"{d:.2g}") - REFERENCE_DUTY)
    return CheckResult(name="duty_cycle_arithmetic", passed=bool(err < 1e-12),
                       error=abs(d - REFERENCE_DUTY), tolerance=0.005,
                       detail=f"1 - 3*sqrt(2.5e-4)/0.25 = {d:.6f}")


def run_validation(seed: int = 0,
                   perturb_ut_weights: bool = False,
                   mc_samples: int = UT_MC_SAMPLES) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    checks = [check_ut_affine(rng, perturb_weights=perturb_ut_weights),
              check_ut_vs_monte_carlo(rng, samples=mc_samples,
                                      perturb_weights=perturb_ut_weights),
              check_riccati(rng),
              check_energy(),
              check_duty_cycle()]
    for c in checks:
        log = logger.info if c.passed else logger.error
        log(f"{c.name}: {'PASS' if c.passed else 'FAIL'} "
            f"(error {c.error:.3e}, tolerance {c.tolerance:.1e})")
    return checks
