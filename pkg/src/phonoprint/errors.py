"""Exception hierarchy shared across the package.

Every error raised on a documented contract violation derives from
:class:`PhonoprintError` and carries a CLI exit code, so the command line
surface can map error classes to distinct process exit statuses.
"""


class PhonoprintError(Exception):
    """Base class for all domain errors."""

    exit_code = 1


class FormatError(PhonoprintError):
    """A file did not match its declared schema or container format."""

    exit_code = 3


class UnknownPhoneError(PhonoprintError):
    exit_code = 4


class UnknownCompositeError(PhonoprintError):
    exit_code = 4


class SilentInputError(PhonoprintError):
    exit_code = 5


class UnsupportedRateError(PhonoprintError):
    exit_code = 5


class TooShortInputError(PhonoprintError):
    exit_code = 5


class AmplitudeRangeError(PhonoprintError):
    """Input samples outside [-1, 1]; rejected rather than clipped."""

    exit_code = 5


class ShapeMismatchError(PhonoprintError):
    exit_code = 6


class MissingStatsError(PhonoprintError):
    exit_code = 6


class ConfigMismatchError(PhonoprintError):
    exit_code = 6


class IncompleteWeightsError(PhonoprintError):
    exit_code = 6


class LengthMismatchError(PhonoprintError):
    exit_code = 7


class InstanceTooLargeError(PhonoprintError):
    exit_code = 7


class EmptyReferenceError(PhonoprintError):
    exit_code = 7


class EmptySetError(PhonoprintError):
    exit_code = 8


class EmptySequenceError(PhonoprintError):
    exit_code = 8


class TooFewSpeakersError(PhonoprintError):
    exit_code = 8


class DegenerateVarianceError(PhonoprintError):
    exit_code = 9


class ConstantInputError(PhonoprintError):
    exit_code = 9
