"""
Main entry point for the srusk CLI.
Coordinates configuration parsing, logging setup and command execution, and maps engine errors to exit codes.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from rich.console import Console

from ..utils.errors import InitialConditionError, SruskError
from ..utils.logging import LogConfig, configure_logging, get_logger
from .config import CLIConfig
from .handlers import HANDLERS
from .parser import create_parser

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_MODEL = 2

_stderr = Console(stderr=True, highlight=False)


def _report_error(error: SruskError) -> None:
    _stderr.print(f"error: {error}", markup=False)
    if isinstance(error, InitialConditionError):
        for name, value in sorted(error.residuals.items()):
            _stderr.print(f"  {name}: residual {value:.3e}", markup=False)


def run_cli(args: Optional[Sequence[str]] = None) -> int:
    """
    Execute CLI with provided arguments or system arguments.

    Args:
        args: Optional sequence of command-line arguments

    Returns:
        Exit code: 0 ok, 2 model error, 3 non-stabilizing chain, 4 bad initial
        condition or integration failure, 5 verification failure, 1 anything else
    """
    parser = create_parser()
    parsed_args = parser.parse_args(args)
    try:
        config = CLIConfig.from_args(parsed_args)
    except argparse.ArgumentTypeError as e:
        parser.error(str(e))

    log_config = LogConfig.get_default_config()
    if config.verbose:
        log_config.log_level = logging.DEBUG
    log_config.log_file = config.log_file
    configure_logging(log_config)

    try:
        config.validate()
        handler = HANDLERS[config.command](config)
        status = handler.run()
        logger.info("command_finished", command=config.command, status=status)
        return status

    except SruskError as e:
        logger.error("command_failed", command=config.command, error=str(e), exit_code=e.exit_code)
        _report_error(e)
        return e.exit_code
    except (FileNotFoundError, ValueError) as e:
        logger.error("command_failed", command=config.command, error=str(e), exit_code=EXIT_MODEL)
        _stderr.print(f"error: {e}", markup=False)
        return EXIT_MODEL
    except Exception as e:
        logger.exception("command_crashed", command=config.command, error=str(e))
        return EXIT_INTERNAL


def main() -> None:
    """Command-line entry point."""
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
