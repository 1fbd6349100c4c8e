"""Exception types shared across the package."""


class HlogError(Exception):
    """Base class for all package errors."""


class ParameterError(HlogError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class DomainError(HlogError, ValueError):
    """A point or domain violates an operation's domain requirement."""


class UnsupportedDomainError(DomainError):
    pass


class CoverageError(HlogError, ValueError):
    """A radius ladder does not reach the range an estimate needs."""


class InvalidKernelError(HlogError, ValueError):
    """Kernel symbol fails the mean-zero requirement."""

    def __init__(self, message, mean):
        super().__init__(message)
        self.mean = mean


class PreconditionError(HlogError, ValueError):
    """An input lacks data an operation requires (e.g. an analytic hessian)."""


class AccuracyWarning(UserWarning):
    """Quadrature settings cannot reach the requested precision."""


class FitError(HlogError, ValueError):
    """Not enough usable points for a regression."""


class UnsupportedDimensionError(HlogError, ValueError):
    """The operation is not defined in the requested dimension."""
