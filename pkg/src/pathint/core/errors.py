"""Exceptions and warning categories raised by the numeric modules."""


class PathIntegralError(Exception):
    """Base exception for every numeric failure in the package."""


class CompositionDiverges(PathIntegralError, ValueError):
    """Raised when a Gaussian integral over the shared variable diverges."""


class TruncationInsufficient(PathIntegralError, ValueError):
    """Raised when a Fock truncation cannot hold the requested states."""


class QuadratureNotConverged(PathIntegralError):
    """Raised when refining a quadrature rule keeps moving the result."""


class UnsupportedSymbol(PathIntegralError, ValueError):
    """Raised when a scheme has no evaluation route for a Hamiltonian symbol."""


class TailUnbounded(PathIntegralError):
    """Raised when the decay of a tabulated or sampled integrand is undecidable."""


class NotHermitian(PathIntegralError, ValueError):
    """Raised when an operator that must be hermitian is not."""


class PotentialBoundViolation(PathIntegralError, ValueError):
    """Raised when a potential dips below its declared lower bound."""


class ExtrapolationError(PathIntegralError):
    """Raised when a fit or extrapolation has too few or degenerate points."""


class ConfigError(PathIntegralError, ValueError):
    """Raised when an experiment configuration fails validation."""


class PathIntegralWarning(UserWarning):
    """Base category for non-fatal numeric conditions."""


class GridTruncationWarning(PathIntegralWarning):
    """Kernel amplitude reaches the edge of the spatial grid."""


class SupportTruncationWarning(PathIntegralWarning):
    """A phase-space function is not negligible on the grid boundary."""


class NonMonotoneWarning(PathIntegralWarning):
    """Errors against an oracle do not shrink along a refinement sequence."""


class VarianceExplosionWarning(PathIntegralWarning):
    """Predicted Monte Carlo error is large compared with the oracle scale."""
