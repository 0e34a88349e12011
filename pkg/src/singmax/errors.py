"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative solve exhausted its iteration budget.

    Carries whatever diagnostic the solver had at abort time (final
    residual, increment history, partial ladder) in ``details``.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class InvariantViolation(RuntimeError):
    """A structural guarantee (positivity, monotonicity, audit) failed.

    This is a hard failure, never a warning: the offending data is attached
    so the caller can inspect it.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
