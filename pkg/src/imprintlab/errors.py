"""Typed error hierarchy.

Every failure a caller can act on gets its own class under ImprintLabError;
the CLI maps them all to exit code 1 with the class name on stderr.
"""


class ImprintLabError(Exception):
    """Base class for all toolkit errors."""


# --- binary / CSV container errors -----------------------------------------

class FormatError(ImprintLabError):
    """Base class for file-format parse and validation errors."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class NonFiniteValueError(FormatError):
    pass


class LabelOutOfRangeError(FormatError):
    pass


class DuplicateClassNameError(FormatError):
    pass


class InvariantViolationError(FormatError):
    pass


# --- numeric / domain errors ------------------------------------------------

class DimensionMismatchError(ImprintLabError):
    pass


class ZeroVectorError(ImprintLabError):
    pass


class ZeroRowError(ImprintLabError):
    pass


class EmptyHeadError(ImprintLabError):
    pass


class EmptyShotSetError(ImprintLabError):
    pass


class UnmappableLabelError(ImprintLabError):
    pass


class InsufficientSamplesError(ImprintLabError):
    pass


class InsufficientClassesError(ImprintLabError):
    pass


class DegenerateInputError(ImprintLabError):
    pass


class BadKError(ImprintLabError):
    pass


class TooFewValuesError(ImprintLabError):
    pass


class EmptyInputError(ImprintLabError):
    pass


class UnsatisfiableSpecError(ImprintLabError):
    pass


class ZeroVectorWarning(UserWarning):
    """Signal (not a failure): a zero vector was passed through normalization."""
