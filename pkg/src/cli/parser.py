"""
Argument parsing for the srusk CLI.
Subcommands analyze, simulate, verify and schemas share seed, output and logging flags.
"""

import argparse
import math
from pathlib import Path
from typing import Dict, List

from .formatters import OutputFormat


def parse_assignments(items: List[str]) -> Dict[str, float]:
    """Parse repeated name=value flags into a mapping."""
    out: Dict[str, float] = {}
    for item in items or []:
        name, sep, value = item.partition('=')
        if not sep or not name.strip():
            raise argparse.ArgumentTypeError(f"expected name=value, got '{item}'")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"value of '{name.strip()}' is not a number: '{value}'")
    return out


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Root seed for every random draw (default: $SRUSK_SEED or 42)"
    )

    parser.add_argument(
        "--output-dir", "--out",
        type=Path,
        default=Path("output"),
        help="Output directory for reports and trajectories"
    )

    parser.add_argument(
        "--output-mode",
        type=lambda x: OutputFormat[x.upper()],
        choices=list(OutputFormat),
        default=OutputFormat.DETAILED,
        help="Output verbosity level"
    )

    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log at DEBUG level"
    )

    parser.add_argument(
        "--log-file",
        type=Path,
        default=None,
        help="Also write logs to this file"
    )


def _add_model(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", type=Path, help="Model definition (.lag)")
    parser.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="Override a declared parameter (repeatable)"
    )


def _add_flow(parser: argparse.ArgumentParser, horizon: float) -> None:
    parser.add_argument("--h", type=float, default=1e-3, help="Integration step (default: 1e-3)")
    parser.add_argument("--T", type=float, default=horizon, help=f"Integration horizon (default: {horizon:g})")


def create_parser() -> argparse.ArgumentParser:
    """Create and configure argument parser."""
    parser = argparse.ArgumentParser(
        prog="srusk",
        description="Skinner-Rusk dynamics for time-dependent Lagrangians",
        epilog="Installed as the `srusk` command; from a checkout run `python -m src.cli.main`.",
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="Regularity, constraint chain and solved vector field")
    _add_model(analyze)
    _add_common(analyze)
    analyze.add_argument(
        "--max-levels",
        type=int,
        default=None,
        help="Constraint level cap (default: 10)"
    )

    simulate = commands.add_parser("simulate", help="Integrate the flow from an initial condition")
    _add_model(simulate)
    _add_common(simulate)
    _add_flow(simulate, math.tau)
    simulate.add_argument(
        "--ic",
        type=str,
        default=None,
        help="Initial condition label from the model, or 't,q1..qn,qd1..qdn'"
    )
    simulate.add_argument(
        "--bind",
        action="append",
        default=[],
        metavar="U=VALUE",
        help="Value of a free parameter of the vector field (repeatable, default 0)"
    )
    simulate.add_argument(
        "--mode",
        choices=["raw", "graph_refined"],
        default=None,
        help="Vector field mode (default: graph_refined when regular, raw otherwise)"
    )
    simulate.add_argument(
        "--no-projection",
        action="store_false",
        dest="projection",
        help="Do not re-impose solved-form constraints after each step"
    )
    simulate.add_argument(
        "--progress",
        action="store_true",
        help="Show a progress bar"
    )

    verify = commands.add_parser("verify", help="Run the verification suite")
    _add_model(verify)
    _add_common(verify)
    _add_flow(verify, 10.0)
    verify.add_argument(
        "--points",
        type=int,
        default=None,
        help="Sample points for the numeric rank checks (default: 50)"
    )

    schemas = commands.add_parser("schemas", help="Export the JSON schemas of every report")
    schemas.add_argument(
        "--dir",
        type=Path,
        default=Path("schemas"),
        help="Target directory (default: schemas)"
    )

    return parser
