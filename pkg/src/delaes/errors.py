"""Exception types shared across the package."""


class DelaesError(Exception):
    """Base class for every error this package raises on purpose."""


class FormatError(DelaesError):
    """A file does not conform to its declared format."""


class EncodingError(FormatError):
    """Raw bytes could not be decoded with the configured text encoding."""


class ScoreRangeError(DelaesError):
    """A score lies outside the prompt's configured range."""


class DomainError(DelaesError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(DelaesError):
    """An operation was invoked with unusable arguments."""


class NumericError(DelaesError):
    """A computation produced non-finite values."""
