"""Command line entry point.

    risnet run --config experiment.json [--output results.csv] [--seed N]
               [--mc-samples N] [--log-level LEVEL]
    risnet validate [--quick]

Exit codes: 0 success, 1 failed acceptance check, 2 configuration error,
3 infeasible parameters, 4 numerical failure.
"""

import argparse
import logging
import sys

from risnet.calculation.experiments import ExperimentRunner, override_config, write_csv
from risnet.calculation.validation import run_validation
from risnet.config import config
from risnet.exceptions import ConfigError, InfeasibleError, NumericalError
from risnet.models.experiment_config import load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def _progress(percent: int, message: str) -> None:
    logger.debug("[%3d%%] %s", percent, message)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risnet",
        description="Coverage and rate of RIS-assisted cellular networks",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        help="Logging level (default: RISNET_LOG_LEVEL)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run an experiment file")
    run_parser.add_argument("--config", required=True, help="Experiment JSON file")
    run_parser.add_argument("--output", default=None, help="CSV path override")
    run_parser.add_argument("--seed", type=int, default=None, help="Seed override")
    run_parser.add_argument(
        "--mc-samples", type=int, default=None, help="Monte Carlo samples override"
    )
    run_parser.add_argument("--log-level", default=None, dest="sub_log_level")

    validate_parser = subparsers.add_parser(
        "validate", help="Run the acceptance checks"
    )
    validate_parser.add_argument(
        "--quick", action="store_true", help="Smaller samples and coarser grids"
    )
    validate_parser.add_argument("--seed", type=int, default=0)
    validate_parser.add_argument("--log-level", default=None, dest="sub_log_level")
    return parser


def setup_logging(level: str | None) -> None:
    logging.basicConfig(
        level=(level or config.RISNET_LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def run_command(args: argparse.Namespace) -> int:
    experiment = override_config(
        load_config(args.config),
        output_path=args.output,
        seed=args.seed,
        mc_samples=args.mc_samples,
    )
    runner = ExperimentRunner(experiment)
    rows = runner.run(_progress)
    write_csv(rows, experiment.output_path)
    if runner.failed_checks:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def validate_command(args: argparse.Namespace) -> int:
    results = run_validation(
        quick=args.quick, seed=args.seed, progress_callback=_progress
    )
    for result in results:
        print(
            f"{'PASS' if result.passed else 'FAIL'}  {result.name}: "
            f"{result.deviation:.4g} (bound {result.bound:.4g})"
        )
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.sub_log_level or args.log_level)
    config.print_settings()

    try:
        if args.command == "run":
            return run_command(args)
        return validate_command(args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        for field in exc.fields:
            logger.error("  at %s", field)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        logger.error("infeasible parameters: %s", exc)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
