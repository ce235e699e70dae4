"""Exception types shared across the package."""


class ElastoflowError(Exception):
    """Base class for all package errors."""


class ConfigError(ElastoflowError):
    """Invalid or inconsistent configuration."""


class GridMismatchError(ElastoflowError):
    """Fields defined on incompatible grids were combined."""


class NonFiniteFieldError(ElastoflowError):
    """A field contains NaN or Inf entries."""


class SolverError(ElastoflowError):
    """Iterative solver failed to converge within its iteration cap.

    Carries the relative residual reached so callers can report it.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PinchOffError(ElastoflowError):
    """The film thickness dropped to the configured floor (h <= h_min)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
