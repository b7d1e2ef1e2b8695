"""Exception types. Each maps to one failure class of the public API."""


class AirylabError(Exception):
    """Base class of every error raised on purpose by this package."""


class ArgumentError(AirylabError, ValueError):
    """Invalid argument values or combinations."""


class SizeError(ArgumentError):
    """Instance exceeds an enumeration or cost guard."""


class DomainError(AirylabError, ValueError):
    """Parameters outside the region where a formula applies."""


class RangeError(AirylabError, ValueError):
    """Requested evaluation points lie outside the simulated range."""


class InvariantError(AirylabError, AssertionError):
    """A structural invariant of a data object failed."""


class ConfigError(AirylabError, ValueError):
    """A configuration cannot deliver the requested accuracy."""


class NumericError(AirylabError, ArithmeticError):
    """Quadrature or determinant did not converge.

    ``estimate`` carries the error estimate that exceeded the tolerance.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
