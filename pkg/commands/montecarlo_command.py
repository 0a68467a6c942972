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
    p = subparsers.add_parser("montecarlo", help="Run a Monte Carlo campaign")
    add_run_arguments(p)
    p.add_argument("--mode", choices=["ddp_reopt", "tsddp_reopt", "tsddp_policy"])
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--saturate", action="store_const", const=True, default=None)
    p.set_defaults(func=cmd_montecarlo)


def cmd_montecarlo(args: argparse.Namespace) -> int:
    overrides = {"montecarlo.mode": args.mode,
                 "montecarlo.samples": args.samples,
                 "montecarlo.workers": args.workers,
                 "montecarlo.saturation": args.saturate}
    try:
        if args.duty is not None:
            overrides["montecarlo.duty_cycle"] = args.duty
        config = load_config(args, overrides)
        processor = Processor(config)
        result, summary = processor.campaign()
        processor.write_campaign(result, summary)
    except (ConfigError, TubeDDPError) as e:
        logger.error(str(e))
        return exit_code_for(e)
    print(f"{summary.problem} / {summary.mode}: {summary.samples} samples, "
          f"{summary.failed} failed")
    for name in ("total", "delta_v", "terminal"):
        s = getattr(summary, name)
        print(f"  {name:9s} median {s.median:.6g}  p5 {s.p5:.6g}  p95 {s.p95:.6g}")
    print(f"  violation fraction {summary.violation.aggregate:.4f}")
    return EXIT_OK
