"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, file and
parse problems exit 2, numerical failures exit 3.
"""


class AiwattError(Exception):
    """Base class for all package errors."""


class ValidationError(AiwattError, ValueError):
    """An input value violates a documented constraint."""


class TraceParseError(AiwattError, ValueError):
    """A trace CSV could not be parsed.

    Carries the 1-based number of the offending data row (0 when the
    problem is not tied to a specific row, e.g. a bad header or an empty
    body). The header does not count as a row.
    """

    def __init__(self, message: str, row: int = 0):
        super().__init__(message)
        self.row = row


class GridMismatchError(ValidationError):
    """Two traces that must share a sampling grid do not."""


class PowerFlowError(AiwattError, RuntimeError):
    """The power-flow solver failed (non-convergence or singular Jacobian)."""
