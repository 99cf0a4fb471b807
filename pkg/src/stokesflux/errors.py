"""Exception types shared across the package."""


class StokesFluxError(Exception):
    """Base class for all library errors."""


class DimensionError(StokesFluxError):
    """Operation requested in a space dimension where it is not defined."""


class DomainError(StokesFluxError):
    """Arguments outside the domain of validity of an operation."""


class SingularPointError(DomainError):
    """Evaluation exactly at a non-removable singularity."""


class ConfigError(StokesFluxError):
    """Invalid or unknown configuration content."""


class QuadratureError(StokesFluxError):
    """Adaptive quadrature failed to converge.

    Carries the best available partial result so callers can decide
    whether to use or reject it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
