"""Entry point of the ``eigstab`` command."""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, NoReturn

from pydantic import ValidationError

from eigstab.cli.config import ConfigError, RunConfig, load_run_config
from eigstab.cli.drivers import (
    TABLE1_EPS,
    TRIANGLE_CASES,
    run_example1,
    run_mesh,
    run_solve,
    run_stabilize,
    run_table1,
    run_triangle_study,
)
from eigstab.core.exceptions import EigstabError
from eigstab.core.mesh import MeshPattern
from eigstab.core.stabilize import WeightMode
from eigstab.shared.config.config_base import ConfigFileError
from eigstab.shared.config.logging import configure_logging
from eigstab.shared.tracing import SERVICE_NAME, initialize_logging, initialize_tracing

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's exit 2."""

    def error(self, message: str) -> NoReturn:
        raise ConfigError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON or YAML run configuration")
    common.add_argument("--eps", type=float, action="append", help="perturbation magnitude (table1: repeat to sweep)")
    common.add_argument(
        "--pattern",
        choices=[p.value for p in MeshPattern],
        action="append",
        help=(
            "diagonal layout of rectangle meshes (table1: repeat to sweep); "
            "left elements cross the macro diagonal and only follow the right-edge stretch or a dilation"
        ),
    )
    common.add_argument("--weight-mode", choices=[m.value for m in WeightMode], help="weight of the right-hand form")
    common.add_argument("--n", type=int, help="cells per rectangle side")
    common.add_argument("--levels", type=int, help="refinement levels of triangle and polygon meshes")
    common.add_argument(
        "--case",
        choices=list(TRIANGLE_CASES),
        action="append",
        help="triangle apex shift (triangle-study: repeat to select cases)",
    )
    common.add_argument("--first", type=int, help="first eigenvalue index of the cluster (1-based)")
    common.add_argument("--last", type=int, help="last eigenvalue index of the cluster (1-based)")
    common.add_argument("--threads", type=int, help="upper bound of parallel eigensolves")
    common.add_argument("--out-dir", type=Path, help="output directory")
    common.add_argument("--no-vtk", action="store_true", help="do not write VTK files")
    common.add_argument("--timings", action="store_true", help="add wall-clock columns to the tables")
    common.add_argument(
        "--log-level",
        choices=["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"],
        help="console log level",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    """The eigstab argument parser with one subcommand per driver."""
    parser = _Parser(
        prog="eigstab",
        description="Stabilized finite-element eigenfunctions for clustered Dirichlet-Laplacian eigenvalues.",
    )
    parser.add_argument("--version", action="store_true", help="print the version and exit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    common = _common_flags()
    for name, help_text in (
        ("mesh", "write the unperturbed and perturbed meshes"),
        ("solve", "smallest eigenpairs on the perturbed domain"),
        ("stabilize", "stabilized eigenfunctions and difference quotients of a cluster"),
        ("table1", "standard FEM against the stabilized cluster on the stretched unit square"),
        ("triangle-study", "apex shifts A-D of the equilateral triangle"),
        ("example1", "standard, stabilized and analytic modes on the stretched unit square"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Nested configuration values set by flags."""
    out: dict[str, Any] = {}
    domain: dict[str, Any] = {}
    if args.command == "triangle-study":
        domain["kind"] = "triangle"
    if args.case:
        domain.update(kind="triangle", case=args.case[-1])
    if args.eps:
        domain["eps"] = args.eps[-1]
    if domain:
        out["domain"] = domain

    mesh = {k: v for k, v in (("n", args.n), ("levels", args.levels)) if v is not None}
    if args.pattern:
        mesh["pattern"] = args.pattern[0]
    cluster = {k: v for k, v in (("first", args.first), ("last", args.last)) if v is not None}
    outputs: dict[str, Any] = {}
    if args.out_dir is not None:
        outputs["dir"] = str(args.out_dir)
    if args.no_vtk:
        outputs["emit_vtk"] = False
    if args.timings:
        outputs["include_timings"] = True
    for key, value in (("mesh", mesh), ("cluster", cluster), ("outputs", outputs)):
        if value:
            out[key] = value
    for key, value in (("weight_mode", args.weight_mode), ("threads", args.threads), ("log_level", args.log_level)):
        if value is not None:
            out[key] = value
    return out


def _table1(config: RunConfig, args: argparse.Namespace) -> object:
    return run_table1(config, eps_values=args.eps or TABLE1_EPS, patterns=args.pattern)


def _triangle_study(config: RunConfig, args: argparse.Namespace) -> object:
    return run_triangle_study(config, cases=args.case or TRIANGLE_CASES)


COMMANDS: dict[str, Callable[[RunConfig, argparse.Namespace], object]] = {
    "mesh": lambda config, _: run_mesh(config),
    "solve": lambda config, _: run_solve(config),
    "stabilize": lambda config, _: run_stabilize(config),
    "table1": _table1,
    "triangle-study": _triangle_study,
    "example1": lambda config, _: run_example1(config),
}


def _version() -> str:
    try:
        return version("eigstab-cli")
    except PackageNotFoundError:
        return "unknown"


def main(argv: Sequence[str] | None = None) -> int:
    """Run one eigstab subcommand.

    Returns:
        0 on success, 1 on configuration errors, 2 on numerical failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        configure_logging("INFO")
        logger.error("%s", e)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    if args.version:
        print(f"eigstab version {_version()}")
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG

    configure_logging(args.log_level or "INFO")
    try:
        config = load_run_config(args.config, _overrides(args))
    except (ConfigError, ConfigFileError, ValidationError, OSError) as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG

    configure_logging(config.log_level)
    tracer_provider, _ = initialize_tracing(SERVICE_NAME, config.otel.endpoint, config.otel.log_console_spans)
    initialize_logging(SERVICE_NAME, config.otel.endpoint, logging.getLevelNamesMapping()[config.otel.log_level])
    logger.info("eigstab %s %s", args.command, _version())
    try:
        COMMANDS[args.command](config, args)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except OSError as e:
        logger.error("cannot write results: %s", e)
        return EXIT_CONFIG
    except EigstabError as e:
        logger.error("numerical failure (%s): %s", type(e).__name__, e)
        return EXIT_NUMERICAL
    finally:
        tracer_provider.shutdown()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
