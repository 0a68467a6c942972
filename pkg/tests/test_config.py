import pytest
import yaml
from pydantic import ValidationError
from models.RunConfig import RunConfig
from utils.config_utils import load_yaml, resolve_config
from utils.env_utils import ENV_KEYS, env_defaults


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    for key in ENV_KEYS.values():
        monkeypatch.delenv(key, raising=False)
    return str(tmp_path / "missing.env")


def _write(path, data):
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


class TestResolve:

    def test_defaults(self, clean_env):
        cfg = resolve_config(dotenv_path=clean_env)
        assert cfg == RunConfig()
        assert cfg.out_dir == "runs"
        assert cfg.problem == "double_integrator"
        assert cfg.montecarlo.samples == 500

    def test_environment_over_defaults(self, clean_env, monkeypatch):
        monkeypatch.setenv("TSDDP_OUT_DIR", "env_runs")
        monkeypatch.setenv("TSDDP_WORKERS", "3")
        cfg = resolve_config(dotenv_path=clean_env)
        assert cfg.out_dir == "env_runs"
        assert cfg.montecarlo.workers == 3

    def test_file_over_environment(self, clean_env, monkeypatch, tmp_path):
        monkeypatch.setenv("TSDDP_OUT_DIR", "env_runs")
        path = _write(tmp_path / "run.yaml", {"out_dir": "file_runs",
                                              "seed": 11,
                                              "montecarlo": {"samples": 20}})
        cfg = resolve_config(path, dotenv_path=clean_env)
        assert cfg.out_dir == "file_runs"
        assert cfg.montecarlo.samples == 20

    def test_flags_over_file(self, clean_env, tmp_path):
        path = _write(tmp_path / "run.yaml", {"out_dir": "file_runs",
                                              "seed": 11,
                                              "montecarlo": {"samples": 20}})
        cfg = resolve_config(path, {"out_dir": "flag_runs",
                                    "montecarlo.samples": 7,
                                    "seed": None,
                                    "double_integrator.duty_cycle": 0.5},
                             dotenv_path=clean_env)
        assert cfg.out_dir == "flag_runs"
        assert cfg.montecarlo.samples == 7
        assert cfg.seed == 11
        assert cfg.double_integrator.duty_cycle == 0.5

    def test_unknown_key(self, clean_env, tmp_path):
        path = _write(tmp_path / "run.yaml", {"montecarlo": {"samplez": 3}})
        with pytest.raises(ValidationError, match="samplez"):
            resolve_config(path, dotenv_path=clean_env)

    def test_out_of_range_value(self, clean_env):
        with pytest.raises(ValidationError):
            resolve_config(overrides={"montecarlo.duty_cycle": 1.5},
                           dotenv_path=clean_env)

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ValueError):
            load_yaml(path)


def test_seed_overrides_campaign_seed():
    cfg = RunConfig(seed=9, montecarlo={"master_seed": 4, "samples": 3})
    assert cfg.campaign.master_seed == 9
    assert cfg.campaign.samples == 3
    assert cfg.montecarlo.master_seed == 4


def test_problem_config_follows_problem():
    assert RunConfig(problem="low_thrust").problem_config.N == 40
    assert RunConfig().problem_config.N == 39


def test_env_defaults_names(clean_env, monkeypatch):
    monkeypatch.setenv("TSDDP_LOG_LEVEL", "DEBUG")
    assert env_defaults(clean_env) == {"log_level": "DEBUG"}
