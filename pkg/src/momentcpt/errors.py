"""Exception types shared across the package."""


class EstimationError(Exception):
    """Base class for estimation and test failures."""


class DegenerateSample(EstimationError):
    """Sample covariance of the moment map is singular (e.g. constant data)."""


class OutOfDomain(EstimationError):
    """A parameter vector left the admissible domain of its family."""


class NoConvergence(EstimationError):
    """An iterative solver exhausted its budget without meeting tolerance."""


class SingularJacobian(EstimationError):
    """The Jacobian of the moment curve is numerically singular."""


class SingularCovariance(EstimationError):
    """A covariance matrix is too ill-conditioned to invert reliably."""
