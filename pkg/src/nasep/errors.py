"""Exception types raised across the package."""


class NasepError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(NasepError):
    """Operands have incompatible shapes or dimensions."""


class NonHermitianError(NasepError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class NonUnitaryError(NasepError):
    """A matrix required to be unitary is not, beyond tolerance."""


class ConservationError(NasepError):
    """A unitary fails to commute with some global charge."""


class DegenerateChargeError(NasepError):
    """A charge has a spectral gap at or below the configured floor."""


class LinearlyDependentError(NasepError):
    """The supplied charges are not linearly independent."""


class AmbiguousAlignmentError(NasepError):
    """Eigenbasis overlap matching between commuting charges is not a clean permutation."""


class CapExceededError(NasepError):
    """Trajectory or permutation count exceeds the configured cap."""


class SupportViolationError(NasepError):
    """Relative-entropy support condition violated (first state leaks outside second's support)."""


class SingularStateError(NasepError):
    """A state required to be full rank has an eigenvalue at or below the floor."""


class ZeroPostselectionError(NasepError):
    """Postselection probability is numerically zero."""


class ExtrapolationError(NasepError):
    """Small-coupling extrapolation did not converge (error not decreasing with g)."""


class NonfiniteValueError(NasepError):
    """A stochastic function returned NaN/Inf on a non-negligible trajectory."""


class OverflowGuardError(NasepError):
    """Matrix exponential argument too large (spectral radius beyond the guard)."""


class ConfigError(NasepError):
    """Invalid configuration file or unknown configuration key."""
