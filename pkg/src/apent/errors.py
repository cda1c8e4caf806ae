"""Exception types shared across the package."""


class ApentError(Exception):
    """Base class for all errors raised by :mod:`apent`."""


class InvalidLetterError(ApentError, ValueError):
    pass


class RankMismatchError(ApentError, ValueError):
    pass


class NotAnEnlargementError(ApentError, ValueError):
    pass


class NotPSDError(ApentError, ValueError):
    pass


class SingularMatrixError(ApentError, ValueError):
    pass


class NotPositiveDefiniteError(ApentError, ValueError):
    """A restricted block matrix of a positive definite function failed the PSD check."""


class SpecError(ApentError, ValueError):
    """Malformed or out-of-range positive definite function description."""


class ShapeError(ApentError, ValueError):
    pass


class SingularPrefixError(ApentError):
    """A prefix of a grounded enumeration has a singular restriction.

    ``step`` is the index ``n`` of the enlargement ``F_n -> F_{n+1}`` that could
    not be processed.
    """

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"singular restriction at enumeration step {step}")
