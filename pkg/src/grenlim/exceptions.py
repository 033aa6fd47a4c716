"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto exit codes: invalid input and domain errors exit
with 2, not-applicable requests with 3, numeric failures with 4.
"""


class GrenlimError(Exception):
    """Base class for all package errors."""


class InvalidInputError(GrenlimError, ValueError):
    """Malformed input: wrong shapes, non-monotone knots, bad config."""


class DomainError(GrenlimError, ValueError):
    """Structurally valid input evaluated outside its admissible domain."""


class NotApplicableError(GrenlimError):
    """The requested quantity is undefined for this configuration."""


class NumericError(GrenlimError, ArithmeticError):
    """A numeric routine failed to meet its tolerance or diverged."""
