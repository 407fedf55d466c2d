"""Error types raised by the simulation and estimation library.

Each class carries the process exit code the command-line front end uses
when the error escapes a subcommand.
"""


class LevyError(Exception):
    """Base class for every error raised by the library."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ArgumentError(LevyError, ValueError):
    """An argument violates an operation's precondition."""

    exit_code = 2


class ConfigError(ArgumentError):
    """A configuration file is malformed.

    Attributes:
        key: The offending configuration key, when known
    """

    def __init__(self, detail: str, key: str | None = None):
        super().__init__(detail)
        self.key = key


class UnsupportedModelError(LevyError):
    """The requested innovation law is not supported by the operation."""

    exit_code = 3


class UnsupportedClosedFormError(UnsupportedModelError):
    """No closed-form increment density exists for the (spec, T) pair."""


class DegeneratePenaltyError(UnsupportedModelError):
    """The MAP penalty is undefined (atom at zero or unbounded density)."""


class NumericalError(LevyError, ArithmeticError):
    """A numerical procedure failed."""

    exit_code = 4


class ResolutionError(NumericalError):
    """A discretization grid is too coarse or too narrow for the law.

    Attributes:
        suggested_points: A grid size that would likely succeed, if known
    """

    def __init__(self, detail: str, suggested_points: int | None = None):
        super().__init__(detail)
        self.suggested_points = suggested_points
