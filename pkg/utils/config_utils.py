from pathlib import Path
from typing import Any, Dict, Optional, Union
import logging
import yaml
from models.RunConfig import RunConfig
from utils.env_utils import env_defaults

logger = logging.getLogger(__name__)


def load_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return data


def _set(d: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def _has(d: Dict[str, Any], dotted: str) -> bool:
    for k in dotted.split("."):
        if not isinstance(d, dict) or k not in d:
            return False
        d = d[k]
    return True


def resolve_config(config_path: Optional[Union[str, Path]] = None,
                   overrides: Optional[Dict[str, Any]] = None,
                   dotenv_path: Optional[str] = None) -> RunConfig:
    """
    Built-in defaults < environment < config file < flag overrides.

    `overrides` maps dotted keys (e.g. "montecarlo.samples") to values;
    None values are ignored.

    Raises:
        pydantic.ValidationError: unknown keys or ill-typed values.
    """
    data = load_yaml(config_path) if config_path else {}
    env = env_defaults(dotenv_path)
    if "out_dir" in env and not _has(data, "out_dir"):
        data["out_dir"] = env["out_dir"]
    if "workers" in env and not _has(data, "montecarlo.workers"):
        _set(data, "montecarlo.workers", env["workers"])
    for key, value in (overrides or {}).items():
        if value is not None:
            _set(data, key, value)
    cfg = RunConfig.model_validate(data)
    logger.debug(f"Resolved config: {cfg.model_dump(mode='json')}")
    return cfg
