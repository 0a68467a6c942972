"""
Long-running reproductions of the benchmark results. Deselected by
default; run with `pytest -m slow`.
"""
import numpy as np
import pytest
from main import main
from models.RunConfig import RunConfig
from processing.Processor import Processor

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def di_processor(tmp_path_factory):
    return Processor(RunConfig(out_dir=str(tmp_path_factory.mktemp("di"))))


@pytest.fixture(scope="module")
def lt_processor(tmp_path_factory):
    return Processor(RunConfig(problem="low_thrust",
                               out_dir=str(tmp_path_factory.mktemp("lt"))))


def _median(processor, mode, duty=1.0):
    cfg = processor.config.model_copy(update={
        "montecarlo": processor.config.montecarlo.model_copy(
            update={"mode": mode, "duty_cycle": duty, "samples": 500, "workers": 0})})
    _, summary = Processor(cfg, processor.out_dir).campaign()
    assert summary.failed == 0
    return summary


class TestDoubleIntegrator:

    def test_ddp_nominal_is_bang_bang(self, di_processor):
        nominal = di_processor.solve_ddp(1.0)
        assert nominal.solution.converged
        u = np.abs(nominal.solution.controls[:, 0])
        coast = u <= 1e-5
        full = (u >= 0.999) & (u <= 1.0 + 1e-8)
        # minimum-fuel optima of the discretized problem have at most one
        # fractional stage where each thrust arc hands over to the coast
        switching = np.flatnonzero(~(coast | full))
        assert len(switching) <= 2
        for k in switching:
            assert full[max(k - 1, 0)] or full[min(k + 1, len(u) - 1)]
        assert full[0] and full[-1] and coast.sum() >= 10
        assert nominal.terminal < 1e-3 * 1e4

    def test_tsddp_reduces_deceleration_arc(self, di_processor):
        nominal = di_processor.solve_tsddp()
        sol = nominal.solution
        assert sol.converged
        assert np.max(sol.constraint_values) <= 1e-8
        center = np.array([U[0, 0] for U in nominal.Us])
        braking = center < -1e-6
        assert braking.any()
        assert np.max(np.abs(center[braking])) <= 0.999

    def test_monte_carlo_trends(self, di_processor):
        policy = _median(di_processor, "tsddp_policy")
        reopt81 = _median(di_processor, "ddp_reopt", 0.81)
        reopt100 = _median(di_processor, "ddp_reopt", 1.0)
        assert policy.total.median < reopt81.total.median
        assert policy.total.median < reopt100.total.median
        assert policy.terminal.median < reopt100.terminal.median
        assert reopt81.terminal.median < reopt100.terminal.median
        assert policy.delta_v.median < reopt81.delta_v.median
        assert policy.violation.aggregate <= 0.01


class TestLowThrust:

    def test_tsddp_nominal_keeps_a_margin(self, lt_processor):
        ddp = lt_processor.solve_ddp(1.0)
        nominal = lt_processor.solve_tsddp(ddp)
        sol = nominal.solution
        assert sol.converged
        assert np.max(sol.constraint_values) <= 1e-8
        # the spread part of the expected terminal penalty is bounded below
        # by the last-stage noise, so the margin is judged on the mean miss
        assert nominal.mean_terminal < 1e-3 * sol.cost
        bound = nominal.prob.control_bound
        tsddp = np.array([np.linalg.norm(U[:, 0]) for U in nominal.Us])
        full = np.linalg.norm(ddp.solution.controls, axis=-1)
        assert np.any((tsddp < 0.99 * bound) & (full >= 0.999 * bound))

    def test_monte_carlo_trends(self, lt_processor):
        policy = _median(lt_processor, "tsddp_policy")
        reopt80 = _median(lt_processor, "ddp_reopt", 0.8)
        reopt100 = _median(lt_processor, "ddp_reopt", 1.0)
        assert policy.total.median < reopt100.total.median
        assert policy.delta_v.median < reopt80.delta_v.median


def test_validate_command():
    assert main(["validate"]) == 0
    assert main(["validate", "--perturb-ut-weights"]) == 4
