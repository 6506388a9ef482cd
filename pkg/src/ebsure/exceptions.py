"""Exception types shared across the package."""


class EbsureError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefinite(EbsureError):
    """A matrix required to be positive definite is not."""


class RankDeficient(EbsureError):
    """A regressor matrix is numerically rank deficient."""


class InvalidConfig(EbsureError, ValueError):
    """A configuration value violates its documented constraints."""


class DomainViolation(EbsureError, ValueError):
    """A hyper-parameter vector lies outside the feasible set."""


class IndexOutOfRange(EbsureError, IndexError):
    """A hyper-parameter index exceeds the family's parameter count."""


class DegenerateReference(EbsureError, ValueError):
    """A fit score denominator is numerically zero."""


class InsufficientSamples(EbsureError, ValueError):
    """Too few samples for the requested statistic."""


class NoFiniteCost(EbsureError):
    """Every optimizer start point produced an infinite cost."""


class SingularHessian(EbsureError):
    """The curvature matrix of a sandwich covariance is numerically singular."""


class InsufficientSweep(EbsureError, ValueError):
    """Too few sweep levels for a regression over condition numbers or sample sizes."""


class InsufficientReplicates(EbsureError, ValueError):
    """Too few Monte Carlo replicates for the requested diagnostic."""


class DimensionMismatch(EbsureError, ValueError):
    """Array dimensions are inconsistent."""


class ExperimentFailed(EbsureError):
    """Too large a fraction of Monte Carlo replicates failed."""


class ConfigError(EbsureError, ValueError):
    """A config file could not be parsed or validated."""
