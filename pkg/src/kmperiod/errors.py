"""Exception types shared across the package."""


class KMPeriodError(Exception):
    """Base class for errors raised by this package."""


class DecodeReject(KMPeriodError):
    """A syndrome could not be decoded into an in-budget mismatch set."""


class SingularSystem(KMPeriodError):
    pass


class CapacityExceeded(KMPeriodError):
    """A string grew past the configured maximum length."""


class EpochMismatch(KMPeriodError):
    """Two sketches were drawn from different randomness epochs."""


class LengthMismatch(KMPeriodError):
    pass


class PositionOutOfRange(KMPeriodError):
    pass


class UndefinedWeight(KMPeriodError):
    """A weight operation received an undefined operand."""


class EmptyStream(KMPeriodError):
    pass


class TooManyWildcards(KMPeriodError):
    pass


class SentinelCollision(KMPeriodError):
    """The wildcard sentinel byte occurs in the input as a regular character."""


class RetryExhausted(KMPeriodError):
    """Internal consistency checks kept failing across fresh-seed reruns."""
