"""Exception hierarchy shared by all modules."""


class LatentQDEError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(LatentQDEError, ValueError):
    """A size, range or problem-definition constraint is violated."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class UsageError(LatentQDEError, ValueError):
    """An operation was called with incompatible arguments."""


class DegenerateError(LatentQDEError, ArithmeticError):
    """A projection or normalisation hit a zero (or numerically zero) norm."""


class UnsupportedProblemError(ConfigurationError):
    """The requested solver path cannot handle this problem."""


class NumericalError(LatentQDEError, ArithmeticError):
    """Training or solving produced non-finite values (``report`` holds partial results)."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
