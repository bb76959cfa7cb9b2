"""
Error types - Exception hierarchy shared by models, systems and the CLI.

Every error carries the process exit code the command-line entry points
return when it escapes a command.
"""

from typing import Dict, Optional


class NlfsError(Exception):
    """Root of all errors raised by this package."""

    exit_code = 1


class InvalidArgumentError(NlfsError, ValueError):
    """A precondition on an argument was violated."""

    exit_code = 2


class UsageError(InvalidArgumentError):
    """Bad command-line or configuration-file input."""


class OutOfDomainError(InvalidArgumentError):
    """A covariate lies outside the domain of a spline basis."""


class DataError(NlfsError):
    """
    Malformed or unusable input data.

    Attributes:
        line (int): 1-based line number of the offending row, if known
    """

    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnderdeterminedDataError(DataError):
    """Fewer observations than spline coefficients."""


class DrawsFileError(DataError):
    """A persisted draws file is missing, unreadable or fails its checksum."""


class NumericalError(NlfsError, ArithmeticError):
    """
    A numerical routine failed (Cholesky, non-finite density, ...).

    Attributes:
        iteration (int): MCMC iteration at which the failure happened, if any
        diagnostics (dict): Extra numbers useful for debugging (condition numbers etc.)
    """

    exit_code = 4

    def __init__(
        self,
        message: str,
        iteration: Optional[int] = None,
        diagnostics: Optional[Dict] = None
    ):
        super().__init__(message)
        self.iteration = iteration
        self.diagnostics = diagnostics or {}

    def at_iteration(self, iteration: int) -> 'NumericalError':
        """Return the same error tagged with an iteration index."""
        self.iteration = iteration
        return self

    def __str__(self):
        text = super().__str__()
        if self.iteration is not None:
            text = f"{text} (iteration {self.iteration})"
        return text


class SingularEvaluationError(NumericalError):
    """Power model evaluated at x = 0 with a non-positive exponent."""


class DegenerateTruncationError(NumericalError):
    """A truncated normal has (numerically) no mass above its bound."""
