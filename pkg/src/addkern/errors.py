"""Exception types shared across the package."""


class AddkernError(Exception):
    """Base class for all library errors."""


class EmptyDatasetError(AddkernError):
    """No rows left after ingestion / filtering."""


class InvalidDMaxError(AddkernError):
    """Superposition dimension outside the supported range 1..3."""


class InvalidScalingError(AddkernError):
    """Operation requires data in a different scaling state."""


class ScalingMismatchError(AddkernError):
    """Train and test data were not scaled with the same maps."""


class DenseLimitExceededError(AddkernError):
    """Dense kernel evaluation refused above the configured row limit."""


class PointOutOfDomainError(AddkernError):
    """Nonuniform point outside [-1/2, 1/2)."""


class EtaTooSmallError(AddkernError):
    """Error-bound evaluation requires eta = ell*pi*m/sqrt(2) >= 1."""


class NonConvergenceError(AddkernError):
    """Iterative optimizer exhausted its iteration budget."""


class MaxIterationsError(AddkernError):
    """Conjugate gradients hit the iteration cap before the tolerance."""


class CgBreakdownError(AddkernError):
    """CG encountered a non-positive curvature direction (operator not PSD)."""


class ZeroVarianceError(AddkernError):
    """Sensitivity analysis of an (almost) constant predictor."""
