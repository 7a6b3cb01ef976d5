"""
Command-line entry point.

    thermotumor run          --config run.yaml [--out DIR] [--dt DT] [--tmax T] [--cells N] [--seed S]
    thermotumor mms          [--dim D] [--resolutions N ...] [--cells N] [--out DIR]
    thermotumor oracle       --config run.yaml [--dt-tiny DT]
    thermotumor depend       --config run.yaml
    thermotumor check-config --config run.yaml

Exit codes: 0 success, 1 validation error, 2 solver failure, 3 I/O error.
Failures print one JSON ErrorSummary line on stderr; successes print one
JSON CommandSummary line on stdout unless --quiet is given.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from thermotumor.core.config import settings
from thermotumor.core.error_handlers import EXIT_OK, render_summary, summarize_exception
from thermotumor.core.exceptions import ConfigValidationError
from thermotumor.core.logging import setup_logging
from thermotumor.repositories import config_store
from thermotumor.schemas.reports import CommandSummary
from thermotumor.schemas.run_config import RunConfig
from thermotumor.services import simulation

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit 1), not argparse's exit 2"""

    def error(self, message: str):
        raise ConfigValidationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermotumor", description="Non-isothermal Allen-Cahn tumor growth simulator")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary line and info logs")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", required=True, type=Path, help="YAML run configuration")
        sub.add_argument("--out", help="output directory (overrides output.directory)")
        sub.add_argument("--dt", type=float, help="time step (overrides controls.dt)")
        sub.add_argument("--tmax", type=float, help="end time (overrides t_final)")
        sub.add_argument("--cells", type=int, help="cells per axis (overrides grid.cells)")
        sub.add_argument("--seed", type=int, help="seed for the random preset")
        sub.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    with_config(commands.add_parser("run", help="simulate a configuration"))
    with_config(commands.add_parser("depend", help="continuous-dependence paired run"))
    with_config(commands.add_parser("check-config", help="validate a configuration only"))
    oracle = commands.add_parser("oracle", help="compare against the explicit reference")
    with_config(oracle)
    oracle.add_argument("--dt-tiny", type=float, help="explicit step (default: half the stability guidance)")

    mms = commands.add_parser("mms", help="manufactured-solution convergence suite")
    mms.add_argument("--dim", type=int, default=1, choices=(1, 2, 3))
    mms.add_argument("--resolutions", type=int, nargs="+", default=[16, 32, 64])
    mms.add_argument("--cells", type=int, default=128, help="grid of the temporal study")
    mms.add_argument("--out", default="output", help="directory for the report CSVs")
    mms.add_argument("--seed", type=int, help="accepted for symmetry; the suite is deterministic")
    mms.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    config = config_store.load_config(args.config)
    return config.with_overrides(
        dt=args.dt, t_final=args.tmax, cells=args.cells, out=args.out, seed=args.seed)


def _dispatch(args: argparse.Namespace) -> CommandSummary:
    command = args.command
    if command == "check-config":
        config = _load(args)
        return CommandSummary(command=command, details={
            "config": str(args.config),
            "cells": config.grid.cells,
            "t_final": config.t_final,
            "sweep_points": len(config.sweep_params()),
        })

    if command == "run":
        results = simulation.simulate_config(_load(args))
        return CommandSummary(command=command, details={
            "runs": len(results),
            "steps": [r.steps for r in results],
            "t_final": [r.final_state.t for r in results],
            "directories": [str(r.directory) for r in results],
        })

    if command == "depend":
        report = simulation.dependence_config(_load(args))
        return CommandSummary(command=command, details={
            "exponent": report.exponent,
            "growth_ratio": report.growth_ratio,
            "satisfies_envelope": report.satisfies_envelope(),
        })

    if command == "oracle":
        distances = simulation.oracle_config(_load(args), args.dt_tiny)
        return CommandSummary(command=command, details={"l2_distance": distances})

    reports = simulation.mms_suite(Path(args.out), dim=args.dim, resolutions=args.resolutions,
                                   temporal_cells=args.cells)
    return CommandSummary(command=command, details={
        report.kind: {"orders": report.final_orders(), "passed": report.passed} for report in reports
    })


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    quiet = "--quiet" in argv
    setup_logging("WARNING" if quiet else settings.LOG_LEVEL, settings.LOG_FORMAT)

    command: Optional[str] = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        summary = _dispatch(args)
    except Exception as exc:
        error = summarize_exception(exc, command)
        print(render_summary(error), file=sys.stderr)
        return error.exit_code

    if not quiet:
        print(summary.model_dump_json())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
