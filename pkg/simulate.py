#!/usr/bin/env python3

import sys
import argparse
import time
import traceback
from pathlib import Path

sys.path.append(str(Path(__file__).parent))

from src.commands import (
    cmd_optimize,
    cmd_oracle_check,
    cmd_sweep_omega,
    cmd_sweep_tv,
    cmd_tomography,
    cmd_transfer,
)
from src.logger import log_run_settings, setup_logging
from src.models import ConfigError, RunConfig
from src.qmath import InvalidParameterError, NumericalError

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = {
    "transfer": cmd_transfer,
    "sweep-omega": cmd_sweep_omega,
    "sweep-tv": cmd_sweep_tv,
    "tomography": cmd_tomography,
    "optimize": cmd_optimize,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    defaults = RunConfig()
    parser = argparse.ArgumentParser(
        description="Qubit state transfer through a weak PPBS coupling: simulation and sweeps"
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--tv-squared", type=float, default=defaults.tv_squared,
                        help="PPBS vertical transmittance T_V (default: %(default)s)")
    parser.add_argument("--th-squared", type=float, default=defaults.th_squared,
                        help="PPBS horizontal transmittance T_H (default: %(default)s)")
    parser.add_argument("--omega-deg", type=float, default=defaults.omega_deg,
                        help="Target preparation angle in degrees")
    parser.add_argument("--kappa-deg", type=float, default=defaults.kappa_deg,
                        help="Source measurement angle in degrees")
    parser.add_argument("--scenario", default=defaults.scenario,
                        help="a: no filter, b: fixed filter, c: filter + feed-forward")
    parser.add_argument("--visibility", type=float, default=defaults.visibility,
                        help="Two-photon interference visibility in [0, 1]")
    parser.add_argument("--shots", type=int, default=defaults.shots,
                        help="Tomography shots per setting")
    parser.add_argument("--seed", type=int, default=defaults.seed)
    parser.add_argument("--format", default=defaults.format,
                        help="Output format: csv or json")
    parser.add_argument("--out", type=str,
                        help="Output directory (default: stdout; tomography uses results/)")
    parser.add_argument("--infinite-statistics", action="store_true",
                        help="Tomography from exact probabilities instead of sampled counts")
    parser.add_argument("--estimator", default=defaults.estimator,
                        help="Tomography estimator: linear or mle (default: %(default)s)")
    parser.add_argument("--counts", type=str,
                        help="Reconstruct from a saved counts CSV instead of sampling")
    parser.add_argument("--flip-reflection-sign", action="store_true",
                        help="Oracle negative control: wrong beam-splitter phase convention")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--no-log-file", action="store_true",
                        help="Log to stderr only")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        tv_squared=args.tv_squared,
        th_squared=args.th_squared,
        omega_deg=args.omega_deg,
        kappa_deg=args.kappa_deg,
        scenario=args.scenario,
        visibility=args.visibility,
        shots=args.shots,
        seed=args.seed,
        format=args.format,
        out=Path(args.out) if args.out else None,
        infinite_statistics=args.infinite_statistics,
        estimator=args.estimator,
        flip_reflection_sign=args.flip_reflection_sign,
        counts_file=Path(args.counts) if args.counts else None,
    ).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logger = setup_logging(log_level=args.log_level, log_to_file=not args.no_log_file)

    try:
        start_time = time.time()
        config = config_from_args(args)
        log_run_settings(logger, args.command, config.settings())

        COMMANDS[args.command](config)

        duration = (time.time() - start_time) * 1000
        logger.info(f"{args.command} completed in {duration:.0f}ms")
        return EXIT_OK

    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except (NumericalError, InvalidParameterError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        logger.debug(traceback.format_exc())
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
