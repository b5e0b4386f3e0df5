"""Exception hierarchy shared by all modules."""


class QutritFridgeError(Exception):
    """Base class for all package errors."""


class InvalidSystemError(QutritFridgeError, ValueError):
    """Raised for physically meaningless system parameters (e.g. N = 0)."""


class ResourceCapError(QutritFridgeError):
    """Raised when a requested construction exceeds a configured size cap."""

    def __init__(self, what, requested, cap):
        self.what = what
        self.requested = requested
        self.cap = cap
        super().__init__(f"{what}: requested N={requested} exceeds cap N<={cap}")


class ContractViolation(QutritFridgeError, ValueError):
    """Raised when an operator is requested on a sector that cannot host it."""


class ConfigurationError(QutritFridgeError, ValueError):
    """Raised for inconsistent reservoir/scenario configuration."""


class NonUniqueSteadyState(QutritFridgeError):
    """Raised when the generator has more than one stationary state."""


class ConvergenceError(QutritFridgeError):
    """Raised when time evolution does not reach stationarity."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NumericalError(QutritFridgeError):
    """Raised when a computed quantity fails a numerical sanity check."""


class InternalError(QutritFridgeError, RuntimeError):
    """Raised when an internal consistency check fails (indicates a bug)."""
