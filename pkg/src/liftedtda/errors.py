"""Exception hierarchy shared by all modules."""


class LiftedTDAError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(LiftedTDAError, ValueError):
    """Malformed input: wrong shapes, out-of-range parameters, bad files."""


class ImmersionError(ValidationError):
    """The Jacobian of a parametric shape is rank deficient at some parameter."""


class EmptyNeighborhoodError(ValidationError):
    """A closed ball used for a local statistic carries zero mass."""


class ResolutionError(LiftedTDAError):
    """A grid search was too coarse to bracket any root."""


class CapacityError(LiftedTDAError):
    """Problem size exceeds what the exact solvers accept."""


class FiltrationError(ValidationError):
    """A simplex stream is not a valid (monotone, closed) filtration."""
