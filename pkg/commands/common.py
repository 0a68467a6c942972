import argparse
import logging
from pydantic import ValidationError
from models.RunConfig import RunConfig
from processing.exceptions import (TubeDDPError,
                                   CampaignFailedError,
                                   DivergedError,
                                   RegularizationExhaustedError)
from utils.config_utils import resolve_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_CAMPAIGN = 3
EXIT_VALIDATION = 4


class ConfigError(Exception):
    pass


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", choices=["double_integrator", "low_thrust"])
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--out-dir")
    parser.add_argument("--duty", type=float, help="Duty-cycle factor in (0, 1]")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--max-iters", type=int)


def load_config(args: argparse.Namespace, overrides: dict) -> RunConfig:
    """
    Resolve the run config from file, environment and flags.

    Raises:
        ConfigError: the configuration is invalid or unreadable.
    """
    base = {"problem": args.problem,
            "out_dir": args.out_dir,
            "seed": args.seed,
            "solver.max_iters": args.max_iters}
    base.update(overrides)
    try:
        problem = args.problem
        if args.duty is not None:
            if problem is None:
                problem = resolve_config(args.config).problem
            base[f"{problem}.duty_cycle"] = args.duty
        return resolve_config(args.config, base)
    except ValidationError as e:
        raise ConfigError(_describe(e)) from e
    except (OSError, ValueError) as e:
        raise ConfigError(str(e)) from e


def _describe(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"])
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def exit_code_for(e: Exception) -> int:
    if isinstance(e, ConfigError):
        return EXIT_CONFIG
    if isinstance(e, (DivergedError, RegularizationExhaustedError)):
        return EXIT_DIVERGED
    if isinstance(e, CampaignFailedError):
        return EXIT_CAMPAIGN
    if isinstance(e, TubeDDPError):
        return EXIT_DIVERGED
    raise e
