"""Exception hierarchy for qdisc."""


class QDiscError(Exception):
    """Base class for every error raised by this package."""


class InvertNonUnit(QDiscError, ZeroDivisionError):
    pass


class OrderMismatch(QDiscError, ValueError):
    pass


class DivByZero(QDiscError, ZeroDivisionError):
    pass


class IndexOutOfRange(QDiscError, IndexError):
    pass


class TruncationTooSmall(QDiscError):
    """A truncation order is too small for the requested exact result.

    ``needed`` carries the minimal sufficient value when it is known.
    """

    def __init__(self, message, needed=None):
        super().__init__(message)
        self.needed = needed


class NotBanded(QDiscError):
    pass


class NotFinite(QDiscError):
    pass


class SolveInconsistent(QDiscError):
    pass


class OrderIncompatible(QDiscError):
    pass


class CrossCheckFailed(QDiscError):
    pass


class NoConventionMatches(QDiscError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class AmbiguousConvention(QDiscError):
    def __init__(self, message, matches=None):
        super().__init__(message)
        self.matches = matches or []


class MismatchWithGram(CrossCheckFailed):
    pass


class FactorizationMismatch(CrossCheckFailed):
    pass


class ConfigInvalid(QDiscError, ValueError):
    pass
