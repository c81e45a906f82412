"""Exception hierarchy shared by every module."""


class KmeError(Exception):
    """Base class for all errors raised by :mod:`kme_decon`."""


class ShapeError(KmeError, ValueError):
    """Array shapes or dimensionalities are inconsistent."""


class DomainError(KmeError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ContractViolation(KmeError):
    """An operation was called in a mode its contract does not support."""


class SingularSystemError(KmeError, ArithmeticError):
    """A linear system could not be factorized, even after jitter escalation.

    Attributes
    ----------
    jitter_trace : list of float
        Absolute jitter values that were tried, in order.
    """

    def __init__(self, message, jitter_trace=()):
        super().__init__(message)
        self.jitter_trace = list(jitter_trace)


class OptimizationFailure(KmeError):
    """Every objective evaluation of an optimizer run failed."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(KmeError, ValueError):
    """A run configuration failed validation."""
