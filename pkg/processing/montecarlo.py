"""
Seeded closed-loop Monte Carlo campaigns and their statistics.

Every sample draws its initial-state and process noise from a child stream
keyed by (master_seed, sample), before any control is computed, so all
modes see the same realizations and parallel runs reproduce serial ones.
"""
from concurrent.futures import ProcessPoolExecutor
from typing import List, NamedTuple, Optional, Sequence
import logging
import os
import numpy as np
from models.DistributionStats import DistributionStats
from models.CampaignSummary import CampaignSummary
from models.GaussianState import GaussianState
from models.MCConfig import MCConfig
from models.MCResult import MCResult
from models.PolicySet import PolicySet
from models.SampleResult import SampleResult
from models.SolverOptions import SolverOptions
from models.StochasticProblem import StochasticProblem
from models.ViolationStats import ViolationStats
from processing.ddp_solver import DDPSolver
from processing.exceptions import (TubeDDPError,
                                   CampaignFailedError,
                                   EmptyInputError,
                                   SampleFailureError)
from processing.gaussian_core import psd_sqrt, psd_sqrt_batch, sigma_weights
from processing.policy import eval_policy_raw, saturate
from processing.transcription import (Transcription,
                                      replicate_controls,
                                      transcribe_deterministic)

logger = logging.getLogger(__name__)


class NoiseDraw(NamedTuple):
    x0: np.ndarray
    w: np.ndarray


class CampaignPlan(NamedTuple):
    """Everything one sample needs; picklable for worker processes."""
    cfg: MCConfig
    prob: StochasticProblem
    warm_controls: np.ndarray
    policies: Optional[PolicySet]
    solver_opts: SolverOptions


def sample_rng(master_seed: int, sample: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, sample]))


def draw_noise(prob: StochasticProblem,
               master_seed: int,
               sample: int) -> NoiseDraw:
    """x_0 ~ N(x̄_0, P_0) and w_k ~ N(0, R_k), k < N."""
    rng = sample_rng(master_seed, sample)
    z0 = rng.standard_normal(prob.nx)
    z = rng.standard_normal((prob.N, prob.nw))
    x0 = prob.init.mean + psd_sqrt(prob.init.cov) @ z0
    w = np.einsum("kij,kj->ki", psd_sqrt_batch(prob.noise_cov), z)
    return NoiseDraw(x0, w)


def step(prob: StochasticProblem, x, u, w, k: int) -> np.ndarray:
    return np.asarray(prob.dynamics(x[None], u[None], w[None], prob.stage(k)))[0]


def point_costs(prob: StochasticProblem,
                states: np.ndarray,
                controls: np.ndarray):
    """(ΔV, terminal) of a realized trajectory with the optimization kernels."""
    w0 = np.zeros((controls.shape[0], prob.nw))
    dv = sum(float(np.asarray(prob.stage_cost(states[k][None], controls[k][None],
                                              w0[k][None], prob.stage(k)))[0])
             for k in range(controls.shape[0]))
    return dv, float(np.asarray(prob.terminal_cost(states[-1][None]))[0])


# ───────────────────────────────────────────────────────────────
# Control laws
# ───────────────────────────────────────────────────────────────

def _ddp_reopt_control(plan: CampaignPlan, x, k, warm):
    prob = plan.prob.deterministic()
    bounds = plan.cfg.duty_cycle * prob.control_bound
    bounds[k] = prob.control_bound[k]
    sub = prob.with_bounds(bounds).tail(k, x)
    sol = DDPSolver(transcribe_deterministic(sub), plan.solver_opts).solve(warm)
    return sol.controls[0], sol.controls


def _tsddp_reopt_control(plan: CampaignPlan, x, k, warm):
    sub = plan.prob.tail(k, x)
    tr = Transcription(sub)
    ocp = tr.to_ocp(plan.solver_opts)
    sol = DDPSolver(ocp, plan.solver_opts).solve(replicate_controls(warm, tr.ns))
    w = sigma_weights(sub.nx, sub.kappa_x)
    means = np.einsum("i,kij->kj", w, sol.controls.reshape(sub.N, tr.ns, sub.nu))
    return means[0], means


def run_sample(plan: CampaignPlan, sample: int) -> SampleResult:
    """
    One closed-loop realization.

    Raises:
        SampleFailureError: a solve or propagation failed.
    """
    cfg, prob = plan.cfg, plan.prob
    draw = draw_noise(prob, cfg.master_seed, sample)
    X = np.empty((prob.N + 1, prob.nx))
    U = np.empty((prob.N, prob.nu))
    U_raw = np.empty((prob.N, prob.nu))
    X[0] = draw.x0
    warm = np.array(plan.warm_controls, dtype=float)
    try:
        for k in range(prob.N):
            if cfg.mode == "tsddp_policy":
                raw = eval_policy_raw(plan.policies.stages[k], X[k])
                u = saturate(raw, prob.control_bound[k]) if cfg.saturation else raw
            else:
                law = (_ddp_reopt_control if cfg.mode == "ddp_reopt"
                       else _tsddp_reopt_control)
                raw, plan_controls = law(plan, X[k], k, warm[k:])
                # the actuator cannot exceed the bound the solver met to tolerance
                u = saturate(raw, prob.control_bound[k])
                warm[k + 1:] = plan_controls[1:]
            U_raw[k], U[k] = raw, u
            X[k + 1] = step(prob, X[k], u, draw.w[k], k)
        dv, term = point_costs(prob, X, U)
    except (TubeDDPError, ArithmeticError, np.linalg.LinAlgError) as e:
        raise SampleFailureError(sample, str(e)) from e
    return SampleResult(sample=sample, states=X, controls=U, raw_controls=U_raw,
                        delta_v=dv, terminal=term)


def _run_sample_safe(plan: CampaignPlan, sample: int) -> SampleResult:
    try:
        return run_sample(plan, sample)
    except SampleFailureError as e:
        N, nx, nu = plan.prob.N, plan.prob.nx, plan.prob.nu
        return SampleResult(sample=sample,
                            states=np.full((N + 1, nx), np.nan),
                            controls=np.full((N, nu), np.nan),
                            raw_controls=np.full((N, nu), np.nan),
                            delta_v=np.nan, terminal=np.nan,
                            failed=True, reason=e.reason)


def reopt_options(cfg: MCConfig, solver_opts: SolverOptions) -> SolverOptions:
    """
    Cheaper options for the warm-started tail solves: only their first
    control is applied, so they stop early on a looser tolerance.
    """
    return solver_opts.model_copy(update={
        "max_iters": min(solver_opts.max_iters, cfg.reopt_max_iters),
        "cost_tolerance": max(solver_opts.cost_tolerance, cfg.reopt_cost_tolerance)})


def resolve_workers(cfg: MCConfig) -> int:
    workers = cfg.workers or os.cpu_count() or 1
    return max(1, min(workers, cfg.samples))


def run_campaign(cfg: MCConfig,
                 prob: StochasticProblem,
                 warm_controls: np.ndarray,
                 policies: Optional[PolicySet] = None,
                 solver_opts: Optional[SolverOptions] = None) -> MCResult:
    """
    Run `cfg.samples` closed-loop realizations of `prob`.

    Args:
        cfg (MCConfig): campaign settings.
        prob (StochasticProblem): problem with the full (100%) control bound.
        warm_controls (np.ndarray): point controls (N, nu) seeding the first
            re-optimization.
        policies (PolicySet): fitted stage policies, tsddp_policy only.

    Raises:
        CampaignFailedError: more than `failure_tolerance` of samples failed.
    """
    if prob.control_bound is None:
        raise ValueError("campaigns need a problem with a control bound")
    if cfg.mode == "tsddp_policy" and (policies is None
                                       or len(policies) != prob.N):
        raise ValueError("tsddp_policy needs one fitted policy per stage")
    plan = CampaignPlan(cfg, prob, np.asarray(warm_controls, dtype=float),
                        policies, reopt_options(cfg, solver_opts or SolverOptions()))
    workers = resolve_workers(cfg)
    logger.info(f"Campaign {prob.name}/{cfg.mode}: {cfg.samples} samples, "
                f"seed={cfg.master_seed}, workers={workers}")
    indices = list(range(cfg.samples))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sample_safe,
                                    [plan] * len(indices), indices))
    else:
        results = []
        for s in indices:
            results.append(_run_sample_safe(plan, s))
            if (s + 1) % max(1, cfg.samples // 10) == 0:
                logger.info(f"  {s + 1}/{cfg.samples} samples")

    results.sort(key=lambda r: r.sample)
    failed = np.array([r.failed for r in results])
    for r in results:
        if r.failed:
            logger.warning(f"Sample {r.sample} failed: {r.reason}")
    if failed.sum() > cfg.failure_tolerance * cfg.samples:
        raise CampaignFailedError(f"{int(failed.sum())} of {cfg.samples} "
                                  f"samples failed")
    dv = np.array([r.delta_v for r in results])
    term = np.array([r.terminal for r in results])
    return MCResult(config=cfg,
                    problem=prob.name,
                    bounds=np.array(prob.control_bound),
                    states=np.stack([r.states for r in results]),
                    controls=np.stack([r.controls for r in results]),
                    raw_controls=np.stack([r.raw_controls for r in results]),
                    delta_v=dv,
                    terminal=term,
                    total=dv + term,
                    failed=failed,
                    failure_reasons=[r.reason or "" for r in results])


# ───────────────────────────────────────────────────────────────
# Statistics
# ───────────────────────────────────────────────────────────────

def empirical_cdf(values: Sequence[float]) -> np.ndarray:
    """
    Right-continuous empirical CDF as (n, 2) rows (value, i/n).

    Raises:
        EmptyInputError: no values.
    """
    v = np.sort(np.asarray(values, dtype=float).reshape(-1))
    if v.size == 0:
        raise EmptyInputError("empirical CDF of an empty sample")
    return np.column_stack([v, np.arange(1, v.size + 1) / v.size])


def violation_stats(result: MCResult,
                    bound=None,
                    rtol: Optional[float] = None) -> ViolationStats:
    """Share of (sample, stage) controls with ‖u‖ > bound."""
    b = result.bounds if bound is None else np.broadcast_to(
        np.asarray(bound, dtype=float), result.bounds.shape)
    rtol = result.config.violation_rtol if rtol is None else rtol
    norms = np.linalg.norm(result.controls[result.ok], axis=-1)
    if norms.size == 0:
        return ViolationStats(aggregate=0.0, count=0,
                              per_stage=[0.0] * result.bounds.size)
    hits = norms > b * (1.0 + rtol)
    return ViolationStats(aggregate=float(hits.mean()),
                          count=int(hits.sum()),
                          per_stage=hits.mean(axis=0).tolist())


def tube_capture(result: MCResult,
                 beliefs: Sequence[GaussianState],
                 n_sigma: float = 3.0,
                 block: Optional[Sequence[int]] = None) -> List[float]:
    """
    Per-stage share of samples whose state lies within the n-σ ellipsoid
    of the nominal belief, restricted to the coordinates in `block`.
    """
    idx = list(range(result.states.shape[-1])) if block is None else list(block)
    S = result.states[result.ok][..., idx]
    out = []
    for k, g in enumerate(beliefs):
        P = g.cov[np.ix_(idx, idx)]
        d = S[:, k] - g.mean[idx]
        scale = max(float(np.abs(g.mean[idx]).max(initial=0.0)), 1.0)
        tol = 1e-9 * scale
        lam, V = np.linalg.eigh(P)
        live = lam > tol ** 2
        z = d @ V
        m2 = np.sum(z[:, live] ** 2 / lam[live], axis=-1)
        # states off the support of a singular P are outside
        off = np.linalg.norm(z[:, ~live], axis=-1)
        inside = (m2 <= n_sigma ** 2) & (off <= tol)
        out.append(float(inside.mean()) if inside.size else 0.0)
    return out


def distribution_stats(values: np.ndarray) -> DistributionStats:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise EmptyInputError("no finite values to summarize")
    p5, med, p95 = np.percentile(v, [5, 50, 95])
    return DistributionStats(median=float(med), p5=float(p5),
                             p95=float(p95), mean=float(v.mean()))


def summarize(result: MCResult,
              beliefs: Optional[Sequence[GaussianState]] = None,
              block: Optional[Sequence[int]] = None,
              run: Optional[dict] = None) -> CampaignSummary:
    cfg = result.config
    return CampaignSummary(
        problem=result.problem,
        mode=cfg.mode,
        samples=result.samples,
        master_seed=cfg.master_seed,
        failed=result.n_failed,
        delta_v=distribution_stats(result.delta_v[result.ok]),
        terminal=distribution_stats(result.terminal[result.ok]),
        total=distribution_stats(result.total[result.ok]),
        violation=violation_stats(result),
        tube_capture=(None if beliefs is None else
                      tube_capture(result, beliefs, cfg.tube_sigma, block)),
        run=run)
