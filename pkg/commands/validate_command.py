import argparse
import logging
from commands.common import EXIT_OK, EXIT_VALIDATION
from processing.validation import run_validation
from utils.system_info_utils import get_system_info

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("validate", help="Run the built-in oracle suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb-ut-weights", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)


def cmd_validate(args: argparse.Namespace) -> int:
    logger.info(f"System: {get_system_info()}")
    checks = run_validation(seed=args.seed,
                            perturb_ut_weights=args.perturb_ut_weights)
    width = max(len(c.name) for c in checks)
    print(f"{'check':{width}s}  result  error      tolerance")
    for c in checks:
        print(f"{c.name:{width}s}  {'PASS' if c.passed else 'FAIL':6s}  "
              f"{c.error:.3e}  {c.tolerance:.1e}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION
