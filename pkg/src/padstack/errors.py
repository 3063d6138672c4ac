"""Exception hierarchy shared by all padstack modules.

The CLI maps these onto exit codes: usage problems exit 1, data and file
format problems exit 2, numerical failures exit 3.
"""


class PadstackError(Exception):
    """Base class for all padstack errors."""


class InvalidInputError(PadstackError, ValueError):
    """An operation received arguments that violate its preconditions."""


class DataError(PadstackError):
    """A dataset, manifest, or protocol is inconsistent or unreadable."""


class FormatError(DataError):
    """A serialized file does not conform to its binary or text format."""


class IntegrityError(DataError):
    """A file parsed correctly but carries corrupt payload (e.g. NaN)."""


class NumericalError(PadstackError, ArithmeticError):
    """A computation produced non-finite values or diverged."""
