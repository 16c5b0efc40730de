"""Exception hierarchy for the ckde package."""


class CkdeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(CkdeError, ValueError):
    """An argument is outside its documented domain."""


class DimensionMismatch(CkdeError, ValueError):
    """Array shapes are inconsistent with the object they are used with."""


class TooFewPoints(CkdeError):
    """An operation needs more data points than were supplied."""


class DegenerateData(CkdeError):
    """The data carries no usable spread (zero variance, identical points)."""


class InconsistentConstraint(CkdeError):
    """A rank-deficient constraint system has no solution."""


class OverConstrained(CkdeError):
    """The constraint fixes every degree of freedom; nothing is left to sample."""


class NumericalBreakdown(CkdeError):
    """A factorization failed or a matrix is too ill-conditioned to trust."""


class UnsupportedDimension(CkdeError):
    """The operation is only defined for a specific number of free dimensions."""


class AcceptanceTooLow(CkdeError):
    """Rejection sampling did not collect enough samples within its budget."""


class EmptyInput(CkdeError, ValueError):
    """An input collection is empty where at least one element is required."""


class TooShort(CkdeError):
    """A time series does not span the requested window length."""


class RefusedNonFinite(CkdeError):
    """Refusing to write NaN or infinite values to an output file."""
