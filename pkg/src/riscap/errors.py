"""Exception types raised across the package."""


class RisCapError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(RisCapError, ValueError):
    """An array size or matrix shape is zero or inconsistent."""


class ShapeError(InvalidDimensionError):
    """A moment was requested for a matrix with more rows than columns."""


class DomainError(RisCapError, ValueError):
    """A function argument lies outside its mathematical domain."""


class SingularCovarianceError(RisCapError, ValueError):
    """A covariance matrix that must be positive definite is not.

    Attributes:
        eigenvalue: the smallest eigenvalue found after symmetrization.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DegenerateSpectrumError(RisCapError, ValueError):
    """Eigenvalues stay too close together even after perturbation."""


class ConvergenceError(RisCapError, RuntimeError):
    """A series did not reach its tolerance within the term budget.

    Attributes:
        residual: upper bound on the neglected tail.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CombinatorialLimitError(RisCapError, ValueError):
    """Subset enumeration was refused because the dimension is too large."""


class AssumptionViolatedError(RisCapError, ValueError):
    """An input breaks a modelling assumption of an asymptotic formula."""


class InconclusiveError(RisCapError, RuntimeError):
    """A power-scaling trace matched none of the known limit patterns.

    Attributes:
        trace: the capacity values that were classified.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(RisCapError, ValueError):
    """An experiment configuration file is malformed."""
