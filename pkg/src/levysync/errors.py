"""Exception hierarchy shared by every module."""


class LevySyncError(Exception):
    """Base class for all errors raised by levysync."""


class ParameterError(LevySyncError, ValueError):
    """A parameter is outside its admissible range."""


class EmptyGridError(ParameterError):
    """A time grid has zero length."""


class StepSizeError(ParameterError):
    """The integration step violates the explicit-Euler stability bound."""


class DomainError(LevySyncError, ValueError):
    """An argument lies outside the domain on which an operation is defined."""


class OutOfSupportError(DomainError):
    """A requested time or window is not covered by the stored path."""


class ShapeError(LevySyncError, ValueError):
    """Array dimensions are inconsistent."""


class AlignmentError(LevySyncError, ValueError):
    """Two objects that must share a time grid do not."""


class NumericError(LevySyncError, ArithmeticError):
    """A numerical routine produced a non-finite or non-convergent result."""


class DivergenceError(NumericError):
    """An integrated state blew up.

    Attributes
    ----------
    time : float
        First grid time at which the state was non-finite or exceeded the
        blow-up threshold.
    """

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"state diverged at t={self.time:.6g}")


class ConfigError(LevySyncError, ValueError):
    """An experiment configuration file is malformed."""
