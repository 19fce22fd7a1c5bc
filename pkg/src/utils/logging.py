"""
Logging utilities.
Handles logging configuration and provides a function to get a structured logger instance.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import structlog
from rich.console import Console
from rich.logging import RichHandler

_CONFIGURED = False


@dataclass
class LogConfig:
    """Configuration for logging setup."""
    log_level: int
    log_format: str
    date_format: str
    log_file: Optional[Path] = None

    @classmethod
    def get_default_config(cls) -> 'LogConfig':
        """Create default logging configuration, honouring SRUSK_LOG_LEVEL."""
        level_name = os.getenv('SRUSK_LOG_LEVEL', 'INFO').upper()
        return cls(
            log_level=getattr(logging, level_name, logging.INFO),
            log_format='%(message)s',
            date_format='%Y-%m-%d %H:%M:%S'
        )


def configure_logging(config: Optional[LogConfig] = None) -> None:
    """
    Configure structlog on top of the standard logging module.

    Console output goes to standard error through rich so that command output
    on standard output stays machine readable.

    Args:
        config: Optional logging configuration, defaults to LogConfig.get_default_config()
    """
    global _CONFIGURED
    config = config or LogConfig.get_default_config()

    root = logging.getLogger('srusk')
    for handler in list(root.handlers):
        root.removeHandler(handler)

    console_handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        log_time_format=config.date_format
    )
    console_handler.setFormatter(logging.Formatter(fmt=config.log_format))
    root.addHandler(console_handler)

    if config.log_file:
        try:
            config.log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(config.log_file)
            file_handler.setFormatter(logging.Formatter(
                fmt='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                datefmt=config.date_format
            ))
            root.addHandler(file_handler)
        except OSError as e:
            root.error(f"Failed to create log file handler: {str(e)}")

    root.setLevel(config.log_level)
    root.propagate = False

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.KeyValueRenderer(key_order=['event'], sort_keys=True),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )
    _CONFIGURED = True


def get_logger(
    name: str,
    level: Optional[int] = None,
    log_file: Optional[Union[str, Path]] = None
) -> structlog.stdlib.BoundLogger:
    """
    Configure (once) and return a structured logger instance.

    Args:
        name: The name of the logger, usually the module __name__
        level: Optional logging level override
        log_file: Optional path to log file

    Returns:
        Bound structlog logger writing under the 'srusk' logging hierarchy
    """
    if not _CONFIGURED or level is not None or log_file is not None:
        config = LogConfig.get_default_config()
        if level is not None:
            config.log_level = level
        if log_file is not None:
            config.log_file = Path(log_file)
        configure_logging(config)

    return structlog.get_logger(f"srusk.{name}")
