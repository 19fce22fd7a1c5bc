"""
Exception hierarchy for the engine.
Every error carries the CLI exit code it maps to; library code raises, the CLI converts.
"""

from typing import Dict, Optional


class SruskError(Exception):
    """Base class for all engine errors."""
    exit_code: int = 1


class ModelError(SruskError):
    """The model definition is unusable."""
    exit_code = 2


class DslError(ModelError):
    """
    Positioned diagnostic raised by the model parser.

    Attributes:
        message: Human readable description
        line: 1-based line of the offending token
        column: 1-based column of the offending token
        filename: Source file name when known
    """

    def __init__(self, message: str, line: int, column: int, filename: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.filename = filename
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        """Render as file:line:col: message."""
        return f"{self.filename or '<input>'}:{self.line}:{self.column}: {self.message}"

    def with_filename(self, filename: str) -> 'DslError':
        """Return the same diagnostic attributed to a file."""
        return type(self)(self.message, self.line, self.column, filename)


class DslSyntaxError(DslError):
    """Source does not follow the grammar."""


class DslSemanticError(DslError):
    """Source parses but violates a SystemSpec invariant."""


class ExpressionError(ModelError):
    """Symbolic expression could not be processed."""


class UnknownCoordinateError(ExpressionError):
    """Coordinate index outside 1..n or unknown coordinate kind."""


class UnboundSymbolError(ExpressionError):
    """A symbol in the expression has no value at evaluation time."""


class EvaluationDomainError(ExpressionError):
    """Numeric evaluation left the real domain (log of nonpositive, division by zero)."""

    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in subexpression '{subexpression}'")


class ChainError(SruskError):
    """The constraint algorithm could not produce a usable final level."""
    exit_code = 3


class ConstantRankError(ChainError):
    """The constant-rank hypothesis fails on the current level."""


class NonStabilizingChainError(ChainError):
    """Maximum number of levels reached without stabilization."""


class ChainNotStabilizedError(ChainError):
    """An operation needs a stabilized chain and got something else."""


class DynamicsError(ModelError):
    """The requested vector field construction is unavailable for this model."""


class RegularityRequiredError(DynamicsError):
    """Operation is only defined for regular Lagrangians."""


class ProjectionUnavailableError(DynamicsError):
    """Projection to the dual jet bundle requires a regular Lagrangian."""


class InitialConditionError(SruskError):
    """Initial condition is not on the final constraint level."""
    exit_code = 4

    def __init__(self, message: str, residuals: Optional[Dict[str, float]] = None):
        self.residuals = residuals or {}
        super().__init__(message)


class IntegrationError(SruskError):
    """Numeric integration failed mid-flow."""
    exit_code = 4

    def __init__(self, message: str, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(f"{message} (step {step}, t={time:.6g})")


class VerificationFailure(SruskError):
    """At least one verification check failed."""
    exit_code = 5

    def __init__(self, message: str, report_path: Optional[str] = None):
        self.report_path = report_path
        super().__init__(message)
