from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Union
import logging
import numpy as np
from models.GaussianState import GaussianState
from models.IterationRecord import IterationRecord
from models.MCResult import MCResult
from models.PolicySet import PolicySet
from models.RunConfig import RunConfig
from models.SigmaSet import SigmaSet
from models.SolveSummary import SolveSummary
from models.SolverSolution import SolverSolution
from models.StochasticProblem import StochasticProblem
from processing.ddp_solver import DDPSolver, TranscribedOCP
from processing.gaussian_core import sigma_weights
from processing.montecarlo import (empirical_cdf,
                                   run_campaign,
                                   summarize)
from processing.policy import fit_policies
from processing.problems import build_problem, continuation, problem_units
from processing.transcription import (Transcription,
                                      replicate_controls,
                                      solution_sigma_sets,
                                      transcribe_deterministic,
                                      tube)
from utils.artifact_utils import write_csv, write_json
from utils.system_info_utils import get_system_info


class NominalRun(NamedTuple):
    mode: str
    prob: StochasticProblem
    solution: SolverSolution
    Xs: List[SigmaSet]
    Us: List[np.ndarray]
    delta_v: float
    terminal: float

    @property
    def beliefs(self) -> List[GaussianState]:
        return tube(self.Xs)

    @property
    def mean_controls(self) -> np.ndarray:
        return np.array([U @ X.weights for X, U in zip(self.Xs, self.Us)])

    @property
    def mean_terminal(self) -> float:
        """Terminal penalty at the mean final state, without the spread."""
        mean = self.Xs[-1].points @ self.Xs[-1].weights
        return float(np.asarray(self.prob.terminal_cost(mean[None]))[0])


def _solve_warning(sol: SolverSolution) -> Optional[str]:
    if sol.converged:
        return None
    if sol.max_iters_reached:
        return (f"iteration budget of {len(sol.iterations)} exhausted "
                f"(max violation {sol.max_violation:.2e})")
    return f"solver stopped: {sol.status}"


class Processor:
    """
    Wires a RunConfig to problems, solvers, campaigns and artifacts.
    """
    def __init__(self,
                 config: RunConfig,
                 out_dir: Union[str, Path, None] = None) -> None:
        self.logger = logging.getLogger(__class__.__name__)
        self.config = config
        self.out_dir = Path(out_dir or config.out_dir).resolve()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.logger.info(f"Processor initialized ({config.problem}, "
                         f"out_dir={self.out_dir})")

    def __str__(self):
        return str(self.out_dir)

    def __repr__(self):
        return (f"Processor(problem={self.config.problem}, "
                f"out_dir={self.out_dir})")

    @property
    def run(self) -> dict:
        """Resolved config echoed into every artifact."""
        return self.config.model_dump(mode="json")

    @property
    def position_block(self) -> Optional[List[int]]:
        return [0, 1] if self.config.problem == "low_thrust" else None

    # ───────────────────────────────────────────────────────────
    # Problems and nominal solves
    # ───────────────────────────────────────────────────────────

    def build(self,
              duty_cycle: Optional[float] = None,
              smoothing: Optional[float] = None) -> StochasticProblem:
        return build_problem(self.config.problem, self.config.problem_config,
                             duty_cycle, smoothing)

    def _continued(self,
                   duty_cycle: Optional[float],
                   transcribe: Callable[[StochasticProblem], TranscribedOCP],
                   init: np.ndarray):
        """
        Solve along the smoothing continuation, each stage warm-started
        from the previous one. Returns the final (problem, ocp, solution)
        with the iteration logs of all stages concatenated.
        """
        cfg = self.config
        log: List[IterationRecord] = []
        for delta in continuation(cfg.problem, cfg.problem_config):
            prob = self.build(duty_cycle, delta)
            ocp = transcribe(prob)
            sol = DDPSolver(ocp, cfg.solver).solve(init)
            init = sol.controls
            for r in sol.iterations:
                log.append(r.model_copy(update={"iteration": len(log) + 1}))
            if delta is not None:
                self.logger.info(f"{ocp.label} δ={delta:.0e}: {sol.status}, "
                                 f"J={sol.cost:.8e}")
        return prob, ocp, sol.model_copy(update={"iterations": log})

    def solve_ddp(self, duty_cycle: Optional[float] = None) -> NominalRun:
        """Deterministic DDP on the noise-free problem at the given duty."""
        prob, ocp, sol = self._continued(
            duty_cycle,
            lambda p: transcribe_deterministic(p.deterministic()),
            np.zeros((self.config.problem_config.N, self.build().nu)))
        prob = prob.deterministic()
        ns = 2 * prob.nx + 1
        w = sigma_weights(prob.nx, prob.kappa_x)
        Xs = [SigmaSet(points=np.tile(x[:, None], ns), weights=w, kappa=prob.kappa_x)
              for x in sol.states]
        Us = [np.tile(u[:, None], ns) for u in sol.controls]
        terminal = float(np.asarray(ocp.terminal_cost(sol.states[-1][None]))[0])
        return NominalRun("ddp", prob, sol, Xs, Us, sol.cost - terminal, terminal)

    def solve_tsddp(self, warm: Optional[NominalRun] = None) -> NominalRun:
        """
        TSDDP on the full-bound problem, warm-started from deterministic
        DDP at 100% duty. A configured duty cycle is not applied: the
        chance constraint reserves the margin instead.
        """
        duty = self.config.problem_config.duty_cycle
        if duty != 1.0:
            self.logger.warning(f"duty_cycle={duty:g} is not used by tsddp; "
                                f"the chance constraint sets the margin")
        warm = warm or self.solve_ddp(1.0)
        ns = 2 * warm.prob.nx + 1
        prob, ocp, sol = self._continued(
            1.0,
            lambda p: Transcription(p).to_ocp(self.config.solver),
            replicate_controls(warm.solution.controls, ns))
        Xs, Us = solution_sigma_sets(prob, sol.states, sol.controls)
        terminal = float(np.asarray(ocp.terminal_cost(sol.states[-1][None]))[0])
        return NominalRun("tsddp", prob, sol, Xs, Us, sol.cost - terminal, terminal)

    def policies(self, nominal: NominalRun) -> PolicySet:
        cfg = self.config.campaign
        bounds = nominal.prob.control_bound if cfg.saturation else None
        return fit_policies(nominal.Xs, nominal.Us, nominal.prob.name,
                            saturation=bounds, run=self.run)

    # ───────────────────────────────────────────────────────────
    # Campaigns
    # ───────────────────────────────────────────────────────────

    def campaign(self):
        """
        Run the configured Monte Carlo mode.

        Returns:
            (MCResult, CampaignSummary)
        """
        cfg = self.config.campaign
        prob = self.build(1.0)
        beliefs = None
        policies = None
        if cfg.mode == "ddp_reopt":
            warm = self.solve_ddp(cfg.duty_cycle).solution.controls
        else:
            nominal = self.solve_tsddp()
            beliefs = nominal.beliefs
            warm = nominal.mean_controls
            if cfg.mode == "tsddp_policy":
                policies = self.policies(nominal)
        result = run_campaign(cfg, prob, warm, policies, self.config.solver)
        summary = summarize(result, beliefs, self.position_block,
                            run={**self.run, "system": get_system_info()})
        return result, summary

    # ───────────────────────────────────────────────────────────
    # Artifacts
    # ───────────────────────────────────────────────────────────

    def _tag(self, mode: str) -> str:
        return f"{self.config.problem}_{mode}"

    def solve_summary(self, nominal: NominalRun,
                      policies: Optional[PolicySet] = None) -> SolveSummary:
        sol = nominal.solution
        return SolveSummary(
            problem=nominal.prob.name,
            mode=nominal.mode,
            objective=sol.cost,
            delta_v=nominal.delta_v,
            terminal_penalty=nominal.terminal,
            max_violation=sol.max_violation,
            converged=sol.converged,
            status=sol.status,
            iterations=len(sol.iterations),
            warning=_solve_warning(sol),
            degenerate_policies=0 if policies is None else
            sum(p.degenerate for p in policies.stages),
            system=get_system_info(),
            run=self.run)

    def write_solve(self,
                    nominal: NominalRun,
                    policies: Optional[PolicySet] = None) -> List[Path]:
        """Nominal trajectory, iteration log, summary and policy files."""
        tag = self._tag(nominal.mode)
        prob = nominal.prob
        x_unit, u_unit = problem_units(self.config.problem,
                                       self.config.problem_config)
        ns = 2 * prob.nx + 1
        header = (["stage"] + [f"x{j}" for j in range(prob.nx)]
                  + [f"u{i}_{j}" for i in range(ns) for j in range(prob.nu)]
                  + ["constraint"])
        C = nominal.solution.constraint_values
        rows = []
        for k, X in enumerate(nominal.Xs):
            mean = X.points @ X.weights * x_unit
            if k < prob.N:
                U = (nominal.Us[k] * u_unit[:, None]).T.ravel().tolist()
                c = [float(C[k, 0])] if C.size else [0.0]
            else:
                U, c = [""] * (ns * prob.nu), [""]
            rows.append([k] + mean.tolist() + U + c)
        paths = [write_csv(self.out_dir / f"{tag}_nominal.csv", header, rows, self.run)]
        log = nominal.solution.iterations
        paths.append(write_csv(
            self.out_dir / f"{tag}_iterations.csv",
            ["iteration", "epoch", "cost", "augmented_cost", "violation",
             "reg", "step", "accepted"],
            [[r.iteration, r.epoch, r.cost, r.augmented_cost, r.violation,
              r.reg, r.step, int(r.accepted)] for r in log],
            self.run))
        paths.append(write_json(self.out_dir / f"{tag}_summary.json",
                                self.solve_summary(nominal, policies)))
        if policies is not None:
            paths.append(write_json(self.out_dir / f"{tag}_policy.json", policies))
        return paths

    def write_campaign(self, result: MCResult, summary) -> List[Path]:
        cfg = result.config
        mode = cfg.mode
        if mode == "ddp_reopt":
            mode = f"{mode}_d{cfg.duty_cycle:g}"
        tag = self._tag(mode)
        nx, nu = result.states.shape[-1], result.controls.shape[-1]
        x_unit, u_unit = problem_units(self.config.problem,
                                       self.config.problem_config)
        N = result.controls.shape[1]
        rows = []
        for s in range(result.samples):
            for k in range(N + 1):
                x = (result.states[s, k] * x_unit).tolist()
                u = ((result.controls[s, k] * u_unit).tolist() if k < N
                     else [""] * nu)
                rows.append([s, k] + x + u)
        header = (["sample", "stage"] + [f"x{j}" for j in range(nx)]
                  + [f"u{j}" for j in range(nu)])
        paths = [write_csv(self.out_dir / f"{tag}_trajectories.csv",
                           header, rows, self.run)]
        for name in ("total", "terminal", "delta_v"):
            values = getattr(result, name)[result.ok]
            paths.append(write_csv(self.out_dir / f"{tag}_cdf_{name}.csv",
                                   ["value", "probability"],
                                   empirical_cdf(values).tolist(), self.run))
        paths.append(write_json(self.out_dir / f"{tag}_summary.json", summary))
        return paths
