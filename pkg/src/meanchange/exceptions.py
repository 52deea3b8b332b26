"""Exception hierarchy.

Parameter and data problems derive from ``ValueError``; numerical failures
derive from ``ArithmeticError`` so callers (the CLI in particular) can map
them to distinct exit codes.
"""


class MeanChangeError(Exception):
    """Base class for all package errors."""


class ParameterError(MeanChangeError, ValueError):
    """An argument is outside its admissible range."""


class DomainError(ParameterError):
    """An observation lies outside the unit interval."""


class InsufficientDataError(MeanChangeError, ValueError):
    """Not enough observations for the requested computation."""


class DataError(MeanChangeError, ValueError):
    """Input data could not be parsed or contains non-finite values."""


class ConfigurationError(ParameterError):
    """A monitoring configuration is inconsistent with the data."""


class DegenerateDistributionError(ParameterError):
    """The pre-change variance is zero."""


class NoTiltNeededError(ParameterError):
    """The mean threshold does not exceed the pre-change mean."""


class InfeasibleError(ParameterError):
    """No tilt of the reference law can reach the requested mean."""


class SupportError(ParameterError):
    """An observation has zero pre-change density."""


class NumericError(MeanChangeError, ArithmeticError):
    """A numerical routine failed to converge or bracket a root."""


class AlphaTooLargeError(NumericError):
    """The refined-threshold equation has no root above 1."""


class EstimationError(MeanChangeError, RuntimeError):
    """A Monte Carlo estimate could not be formed (e.g. all trials censored)."""
