"""Exception types shared across the package."""


class BnsError(Exception):
    """Base class for all package errors."""


class DomainError(BnsError):
    """Argument outside the mathematical domain of an operation."""


class IntegrationError(BnsError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConfigError(BnsError):
    """Invalid or incomplete run configuration."""


class RegressionError(BnsError):
    """Least-squares regression could not be solved."""


class StabilityError(BnsError):
    """Explicit-part stability bound violated; reduce the time step."""


class NonConvergence(BnsError):
    """Iterative sweeps exceeded the allowed count without converging."""


class GridMismatch(BnsError):
    """Two surfaces do not share a common grid."""


class BoundaryNotFound(BnsError):
    """The obstacle never binds, so no exercise boundary exists."""
