# main.py
import argparse
import logging
import sys
from typing import List, Optional
from commands import montecarlo_command, solve_command, validate_command
from utils.env_utils import env_defaults

logger = logging.getLogger(__name__)

# ───────────────────────────────────────────────────────────
# CLI setup
# ───────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsddp",
        description="Tube stochastic DDP: unscented transcription, "
                    "constrained DDP and Monte Carlo campaigns.")
    parser.add_argument("--log-level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)
    solve_command.add_parser(sub)
    montecarlo_command.add_parser(sub)
    validate_command.add_parser(sub)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = args.log_level or env_defaults().get("log_level", "INFO")
    logging.basicConfig(level=level.upper(),
                        format="%(levelname)8s %(name)s | %(message)s",
                        )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
