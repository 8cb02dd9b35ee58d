"""Exception taxonomy shared across the package.

CLI exit-code mapping: usage errors exit 2 (argparse), data errors
(InvalidInputError, ParseError, UnsupportedModelError) exit 3, numeric
errors (FitError, NumericError) exit 4.
"""


class TreeUQError(Exception):
    """Base class for all package errors."""


class InvalidInputError(TreeUQError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(TreeUQError, ValueError):
    """A model dump or CSV file is malformed; carries location info."""

    def __init__(self, message: str, *, line: int | None = None,
                 column: int | None = None, offset: int | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        if offset is not None:
            loc.append(f"offset {offset}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.column = column
        self.offset = offset


class UnsupportedModelError(TreeUQError, ValueError):
    """The dump is a valid model we deliberately do not support
    (classification, multi-output, categorical splits)."""


class FitError(TreeUQError, RuntimeError):
    """Distribution fitting failed; carries the last iterate if any."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class NumericError(TreeUQError, RuntimeError):
    """A numeric routine (quadrature, inversion) did not converge."""


class EnvironmentError_(TreeUQError, RuntimeError):
    """A required external tool or library is unavailable."""
