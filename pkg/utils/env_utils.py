from typing import Dict, Iterable, Optional
from dotenv import load_dotenv
import logging
import os

logger = logging.getLogger(__name__)

ENV_KEYS = {"out_dir": "TSDDP_OUT_DIR",
            "workers": "TSDDP_WORKERS",
            "log_level": "TSDDP_LOG_LEVEL"}


def check_env(expected: Iterable[str] = ENV_KEYS.values(),
              dotenv_path: Optional[str] = None
              ) -> Dict[str, str]:
    """
    Load a .env file (if any) and return the expected variables that are
    set in the environment.
    """
    load_dotenv(dotenv_path=dotenv_path)
    found = {k: v for k, v in os.environ.items() if k in expected}
    if found:
        logger.debug(f"Retrieved {','.join(found.keys())} from ENV")
    return found


def env_defaults(dotenv_path: Optional[str] = None) -> Dict[str, str]:
    """Run-setting defaults keyed by setting name (out_dir, workers, ...)."""
    env = check_env(ENV_KEYS.values(), dotenv_path)
    return {name: env[key] for name, key in ENV_KEYS.items() if key in env}
