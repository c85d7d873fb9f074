"""Exception types shared across the package.

The CLI maps every subclass of ``NumericalError`` to exit status 1.
"""


class KerrlabError(Exception):
    """Base class for all package errors."""


class DomainError(KerrlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(KerrlabError):
    """A truncation would exceed the configured hard cap."""


class NumericalError(KerrlabError):
    """A computation produced a non-finite or inconsistent result."""


class ConsistencyError(NumericalError):
    """An invariant (positivity, Hermiticity, ...) was violated beyond rounding."""


class ConvergenceError(NumericalError):
    """An iterative procedure did not converge."""


class InsufficientScalingError(NumericalError):
    """No usable linear scaling region was found."""


class DegenerateDataError(NumericalError):
    """The input data carry no usable information for the estimator."""
