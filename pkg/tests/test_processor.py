import logging
import numpy as np
import pytest
from models.DoubleIntegratorConfig import DoubleIntegratorConfig
from models.RunConfig import RunConfig
from processing.Processor import Processor
from processing.problems import smoothing_schedule
from processing.transcription import tube
from utils.artifact_utils import read_csv, read_run


def _short_config(out_dir, **montecarlo) -> RunConfig:
    return RunConfig(out_dir=str(out_dir),
                     double_integrator={"N": 8, "x0": [-0.2, 0.0]},
                     solver={"max_iters": 200},
                     montecarlo={"samples": 2, **montecarlo})


@pytest.fixture(scope="module")
def processor(tmp_path_factory):
    return Processor(_short_config(tmp_path_factory.mktemp("processor")))


@pytest.fixture(scope="module")
def ddp_nominal(processor):
    return processor.solve_ddp(1.0)


@pytest.fixture(scope="module")
def tsddp_nominal(processor, ddp_nominal):
    return processor.solve_tsddp(ddp_nominal)


def test_repr(processor):
    assert "double_integrator" in repr(processor)
    assert str(processor) == str(processor.out_dir)
    assert processor.position_block is None


def test_ddp_nominal_is_a_collapsed_tube(ddp_nominal):
    assert ddp_nominal.mode == "ddp"
    assert len(ddp_nominal.Xs) == 9 and len(ddp_nominal.Us) == 8
    for X in ddp_nominal.Xs:
        np.testing.assert_array_equal(X.points, np.tile(X.points[:, :1], 5))
    np.testing.assert_allclose(ddp_nominal.mean_controls, ddp_nominal.solution.controls,
                               rtol=1e-14, atol=1e-15)
    assert ddp_nominal.delta_v + ddp_nominal.terminal == pytest.approx(
        ddp_nominal.solution.cost)


def test_tsddp_nominal(tsddp_nominal):
    assert tsddp_nominal.mode == "tsddp"
    assert tsddp_nominal.solution.states.shape == (9, 10)
    assert tsddp_nominal.solution.controls.shape == (8, 5)
    sol = tsddp_nominal.solution
    assert sol.converged
    assert sol.max_violation <= 1e-8
    beliefs = tsddp_nominal.beliefs
    np.testing.assert_allclose(beliefs[0].mean, [-0.2, 0.0])
    assert np.trace(beliefs[-1].cov) > np.trace(beliefs[0].cov)


def test_policies_reproduce_sigma_controls(processor, tsddp_nominal):
    policies = processor.policies(tsddp_nominal)
    assert len(policies) == 8
    assert policies.run == processor.run
    assert all(p.saturation is None for p in policies.stages)
    for p, X, U in zip(policies.stages, tsddp_nominal.Xs, tsddp_nominal.Us):
        np.testing.assert_allclose(p.u0, U @ X.weights, atol=1e-12)


def test_solve_artifacts(processor, tsddp_nominal):
    policies = processor.policies(tsddp_nominal)
    paths = processor.write_solve(tsddp_nominal, policies)
    assert [p.name for p in paths] == ["double_integrator_tsddp_nominal.csv",
                                       "double_integrator_tsddp_iterations.csv",
                                       "double_integrator_tsddp_summary.json",
                                       "double_integrator_tsddp_policy.json"]
    rows = read_csv(paths[0])
    means = np.array([[float(r["x0"]), float(r["x1"])] for r in rows])
    np.testing.assert_allclose(means, [g.mean for g in tube(tsddp_nominal.Xs)],
                               rtol=1e-15, atol=1e-15)
    assert read_run(paths[1])["problem"] == "double_integrator"
    summary = processor.solve_summary(tsddp_nominal, policies)
    assert summary.degenerate_policies == sum(p.degenerate for p in policies.stages)
    assert summary.system["numpy"] == np.__version__


def test_reoptimized_campaign_tag(tmp_path):
    proc = Processor(_short_config(tmp_path, mode="ddp_reopt", duty_cycle=0.8))
    result, summary = proc.campaign()
    assert summary.mode == "ddp_reopt"
    assert summary.tube_capture is None
    paths = proc.write_campaign(result, summary)
    assert paths[0].name == "double_integrator_ddp_reopt_d0.8_trajectories.csv"
    assert len(read_csv(paths[0])) == 2 * 9


def test_continuation_logs_every_stage(processor, ddp_nominal):
    log = ddp_nominal.solution.iterations
    assert [r.iteration for r in log] == list(range(1, len(log) + 1))
    assert len(log) >= len(smoothing_schedule(processor.config.double_integrator))
    assert ddp_nominal.solution.converged
    assert ddp_nominal.mean_terminal == pytest.approx(ddp_nominal.terminal, rel=1e-6, abs=1e-12)


def test_tsddp_converges_under_an_active_chance_constraint(tmp_path):
    # -0.5 in 8 stages needs the full bound on the first two stages
    config = _short_config(tmp_path).model_copy(update={
        "double_integrator": DoubleIntegratorConfig(N=8, x0=[-0.5, 0.0])})
    proc = Processor(config)
    ddp = proc.solve_ddp(1.0)
    assert np.abs(ddp.solution.controls).max() >= 0.999
    sol = proc.solve_tsddp(ddp).solution
    assert sol.converged
    assert sol.max_violation <= config.solver.constraint_tolerance
    assert sol.status == "converged"


def test_tsddp_reports_an_unused_duty_cycle(tmp_path, ddp_nominal, caplog):
    config = _short_config(tmp_path).model_copy(update={
        "double_integrator": DoubleIntegratorConfig(N=8, x0=[-0.2, 0.0], duty_cycle=0.8)})
    with caplog.at_level(logging.WARNING):
        nominal = Processor(config).solve_tsddp(ddp_nominal)
    assert "duty_cycle=0.8 is not used by tsddp" in caplog.text
    np.testing.assert_array_equal(nominal.prob.control_bound, np.ones(8))


def test_summary_warns_when_the_budget_runs_out(processor, ddp_nominal):
    assert processor.solve_summary(ddp_nominal).warning is None
    stopped = ddp_nominal.solution.model_copy(update={"converged": False,
                                                      "status": "max_iters"})
    summary = processor.solve_summary(ddp_nominal._replace(solution=stopped))
    assert summary.warning.startswith("iteration budget of")
    stalled = stopped.model_copy(update={"status": "max_al_updates"})
    summary = processor.solve_summary(ddp_nominal._replace(solution=stalled))
    assert summary.warning == "solver stopped: max_al_updates"
