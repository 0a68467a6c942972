import argparse
import logging
from commands.common import (EXIT_OK,
                             ConfigError,
                             add_run_arguments,
                             exit_code_for,
                             load_config)
from processing.Processor import Processor
from processing.exceptions import TubeDDPError

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("solve", help="Solve the nominal problem")
    add_run_arguments(p)
    p.add_argument("--mode", choices=["ddp", "tsddp"])
    p.set_defaults(func=cmd_solve)


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        config = load_config(args, {"mode": args.mode})
        processor = Processor(config)
        if config.mode == "ddp":
            nominal = processor.solve_ddp()
            policies = None
        else:
            nominal = processor.solve_tsddp()
            policies = processor.policies(nominal)
        processor.write_solve(nominal, policies)
    except (ConfigError, TubeDDPError) as e:
        logger.error(str(e))
        return exit_code_for(e)
    sol = nominal.solution
    print(f"{config.problem} / {nominal.mode}: J_D={sol.cost:.8g} "
          f"(ΔV {nominal.delta_v:.8g}, terminal {nominal.terminal:.3g}), "
          f"max violation {sol.max_violation:.2e}, status {sol.status}")
    if not sol.converged:
        logger.warning(f"Solver did not converge: {sol.status}")
    return EXIT_OK
