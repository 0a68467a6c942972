import json
import logging
import pytest
import yaml
from commands.common import (EXIT_CAMPAIGN,
                             EXIT_CONFIG,
                             EXIT_DIVERGED,
                             ConfigError,
                             exit_code_for)
from main import build_parser, main
from processing.exceptions import (CampaignFailedError,
                                   DivergedError,
                                   RegularizationExhaustedError,
                                   SingularRadiusError)
from utils.artifact_utils import read_csv, read_run
from utils.env_utils import ENV_KEYS


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ENV_KEYS.values():
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def short_config(tmp_path):
    path = tmp_path / "short.yaml"
    path.write_text(yaml.safe_dump({
        "problem": "double_integrator",
        "double_integrator": {"N": 8, "x0": [-0.2, 0.0]},
        "solver": {"max_iters": 60},
    }), encoding="utf-8")
    return path


class TestExitCodes:

    @pytest.mark.parametrize("error, code", [
        (ConfigError("bad"), EXIT_CONFIG),
        (DivergedError("nan"), EXIT_DIVERGED),
        (RegularizationExhaustedError("reg"), EXIT_DIVERGED),
        (SingularRadiusError("r = 0"), EXIT_DIVERGED),
        (CampaignFailedError("too many"), EXIT_CAMPAIGN),
    ])
    def test_mapping(self, error, code):
        assert exit_code_for(error) == code

    def test_foreign_errors_propagate(self):
        with pytest.raises(KeyError):
            exit_code_for(KeyError("x"))


def test_parser_subcommands():
    args = build_parser().parse_args(["montecarlo", "--samples", "3", "--saturate"])
    assert args.samples == 3 and args.saturate is True
    args = build_parser().parse_args(["montecarlo"])
    assert args.saturate is None
    with pytest.raises(SystemExit):
        build_parser().parse_args(["solve", "--mode", "tsddp_policy"])


def test_unknown_config_key(tmp_path, caplog):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump({"solver": {"max_iter": 5}}), encoding="utf-8")
    with caplog.at_level(logging.ERROR):
        code = main(["solve", "--config", str(path), "--out-dir", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "max_iter" in caplog.text


def test_missing_config_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG


def test_solve_writes_artifacts(tmp_path, short_config, capsys):
    out = tmp_path / "out"
    code = main(["solve", "--config", str(short_config), "--out-dir", str(out),
                 "--mode", "ddp", "--duty", "0.9"])
    assert code == 0
    assert "double_integrator / ddp" in capsys.readouterr().out

    nominal = out / "double_integrator_ddp_nominal.csv"
    run = read_run(nominal)
    assert run["out_dir"] == str(out)
    assert run["double_integrator"]["duty_cycle"] == 0.9
    rows = read_csv(nominal)
    assert len(rows) == 9
    assert rows[-1]["u0_0"] == ""
    assert all(abs(float(r["u0_0"])) <= 0.9 * (1 + 1e-3) for r in rows[:-1])

    summary = json.loads((out / "double_integrator_ddp_summary.json").read_text())
    assert summary["mode"] == "ddp"
    assert summary["iterations"] >= 1
    assert summary["objective"] == pytest.approx(summary["delta_v"]
                                                 + summary["terminal_penalty"])
    assert read_run(out / "double_integrator_ddp_iterations.csv") == run
    assert not (out / "double_integrator_ddp_policy.json").exists()


def test_montecarlo_is_reproducible(tmp_path, short_config):
    out = tmp_path / "mc"
    argv = ["montecarlo", "--config", str(short_config), "--out-dir", str(out),
            "--samples", "1", "--seed", "7"]
    assert main(argv) == 0
    files = sorted(out.glob("*"))
    first = {p.name: p.read_bytes() for p in files}
    assert "double_integrator_tsddp_policy_trajectories.csv" in first
    assert "double_integrator_tsddp_policy_cdf_total.csv" in first

    assert main(argv) == 0
    second = {p.name: p.read_bytes() for p in sorted(out.glob("*"))}
    assert first == second
    assert read_run(out / "double_integrator_tsddp_policy_cdf_delta_v.csv")["seed"] == 7
