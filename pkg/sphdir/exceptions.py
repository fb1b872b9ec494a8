"""Error hierarchy shared by the library, the CLI and the HTTP layer."""

from typing import Optional, Tuple


class SDDError(Exception):
    """Base class for all errors raised by sphdir."""


class DomainError(SDDError, ValueError):
    """An argument lies outside the domain of the function."""


class DimensionMismatchError(DomainError):
    pass


class NotOnSphereError(DomainError):
    """A point is not on the positive orthant of the unit sphere."""


class InfiniteDensityError(DomainError):
    """The density is +inf: a coordinate is zero while its alpha is below 1/2."""


class ModeUndefinedError(DomainError):
    """The mode needs every alpha_i > 1/2."""


class DataError(SDDError, ValueError):
    """Input data cannot be used as given."""


class RootBracketError(SDDError, RuntimeError):
    def __init__(self, message: str, bracket: Optional[Tuple[float, float]] = None):
        if bracket is not None:
            message = f"{message} (attempted bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])"
        super().__init__(message)
        self.bracket = bracket


class ConvergenceError(SDDError, RuntimeError):
    pass


class OptimizationError(SDDError, RuntimeError):
    pass
