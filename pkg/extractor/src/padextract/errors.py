"""Exception hierarchy for the extractor."""


class ExtractError(Exception):
    """Base class for extractor failures."""


class InvalidInputError(ExtractError, ValueError):
    """Caller passed an argument outside its documented domain."""


class DataError(ExtractError):
    """Video, weights, or output files are missing or unusable."""
