"""
Output formatting system for command results.
Provides minimal, detailed (rich tables) and JSON renderings of one command run.
"""

import json
from abc import abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Protocol, Sequence

from rich import box
from rich.console import Console
from rich.table import Table

from ..utils.logging import get_logger

logger = get_logger(__name__)


class OutputFormat(str, Enum):
    """Supported output format types."""
    MINIMAL = "minimal"
    DETAILED = "detailed"
    JSON = "json"

    def __str__(self) -> str:
        return self.value


@dataclass
class ResultTable:
    """Titled table shown in detailed mode."""
    title: str
    headers: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)


@dataclass
class CommandResult:
    """
    Type-safe container for the outcome of one command.

    Attributes:
        command: Subcommand name
        model: Model display name
        ok: Whether the command reached its success criterion
        summary: One-line summary, printed by every formatter
        tables: Tables for detailed mode
        details: Payload for JSON mode
        artifacts: Written files keyed by kind
    """
    command: str
    model: str
    ok: bool
    summary: str
    tables: List[ResultTable] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)


class OutputFormatter(Protocol):
    """Protocol defining output formatter interface."""

    @abstractmethod
    def format_result(self, result: CommandResult) -> str:
        """Format a command result according to specific output requirements."""
        pass


class MinimalFormatter:
    """Status mark followed by the summary line."""

    def format_result(self, result: CommandResult) -> str:
        return f"{'✓' if result.ok else '✗'} {result.summary}"


class DetailedFormatter:
    """Summary plus rich tables, rendered to plain text."""

    def __init__(self, width: int = 120):
        self.width = width

    def _table(self, spec: ResultTable) -> Table:
        table = Table(title=spec.title, box=box.SIMPLE, title_justify="left")
        for header in spec.headers:
            table.add_column(header, overflow="fold")
        for row in spec.rows:
            table.add_row(*[str(v) for v in row])
        return table

    def format_result(self, result: CommandResult) -> str:
        console = Console(width=self.width, color_system=None, force_terminal=False)
        with console.capture() as capture:
            console.print(result.summary, markup=False, highlight=False)
            for spec in result.tables:
                console.print(self._table(spec))
            if result.artifacts:
                console.print(self._table(ResultTable(
                    title="Artifacts",
                    headers=("kind", "path"),
                    rows=[(k, v) for k, v in sorted(result.artifacts.items())],
                )))
        return capture.get().rstrip()


class JSONFormatter:
    """Provides JSON-formatted output."""

    def format_result(self, result: CommandResult) -> str:
        payload = {
            "command": result.command,
            "model": result.model,
            "ok": result.ok,
            "summary": result.summary,
            "details": result.details,
            "artifacts": result.artifacts,
        }
        return json.dumps(payload, indent=2, sort_keys=True, default=str)


class OutputManager:
    """Manages output formatting based on specified format."""

    _formatters = {
        OutputFormat.MINIMAL: MinimalFormatter(),
        OutputFormat.DETAILED: DetailedFormatter(),
        OutputFormat.JSON: JSONFormatter()
    }

    def __init__(self, format_type: OutputFormat = OutputFormat.DETAILED):
        """Initialise with specified output format."""
        self.formatter = self._formatters.get(format_type)
        if not self.formatter:
            logger.warning("unsupported_output_format", format=str(format_type))
            self.formatter = self._formatters[OutputFormat.DETAILED]

    def format_result(self, result: CommandResult) -> str:
        """Format result using configured formatter."""
        return self.formatter.format_result(result)

    def emit(self, result: CommandResult) -> None:
        """Print the formatted result on standard output."""
        print(self.format_result(result))
