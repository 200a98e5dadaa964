"""Exception types shared across the package.

Every raisable condition gets its own class so callers can catch precisely.
All inherit from LtailError; EmptyFamilyWarning is the lone warning category
(an empty enumeration is a legal result, downstream consumers that need data
raise EmptyFamily themselves).
"""


class LtailError(Exception):
    """Base class for all package errors."""


# curve arithmetic

class NotPrime(LtailError):
    """Argument required to be prime is not."""


class BadReduction(LtailError):
    """Prime divides the conductor; good-reduction routine refuses it."""


class GoodReduction(LtailError):
    """Prime does not divide the conductor; bad-reduction routine refuses it."""


class OverBound(LtailError):
    """Requested prime or index exceeds the precomputed table bound."""


# family enumeration

class ZeroInput(LtailError):
    """Zero passed where a nonzero integer is required."""


class NotCoprime(LtailError):
    """Coprimality precondition violated."""


class EmptyFamily(LtailError):
    """A nonempty twist family was required but none was available."""


class EmptyFamilyWarning(UserWarning):
    """Constraints admit no discriminant below the height cap."""


# central values

class TableTooSmall(LtailError):
    """Coefficient table too short for the requested series length."""


class NonFundamental(LtailError):
    """Discriminant is not fundamental."""


class WrongSign(LtailError):
    """Operation requires the opposite functional-equation sign."""


class CacheMiss(LtailError):
    """Requested value not present in the on-disk cache."""


# barrier schedule

class AlphaOutOfRange(LtailError):
    """Deviation parameter outside (0, 1/2)."""


class DegenerateSchedule(LtailError):
    """Height cap too small to support even one barrier segment."""


class IndexOutOfRange(LtailError, IndexError):
    """Segment index outside the schedule range."""


# random walk statistics

class BadVariance(LtailError):
    """Nonpositive variance passed to a Gaussian tail."""


class ROutOfRange(LtailError):
    """Moment order too large for the bound to be meaningful."""


class InsufficientData(LtailError):
    """Too few samples to fit or estimate."""


# Dirichlet polynomials

class NotPrimeSupported(LtailError):
    """Polynomial support is not confined to primes."""


class SupportViolation(LtailError):
    """Polynomial support leaves the allowed index set."""


class OmegaViolation(LtailError):
    """Term has more prime factors (with multiplicity) than allowed."""


class LengthExceeded(LtailError):
    """Polynomial length exceeds the well-factorable budget."""


class TooLargeToFactor(LtailError):
    """Integer exceeds the factorization table."""


class NotWellFactorable(LtailError):
    """Polynomial fails the well-factorable length constraint."""


class ConstraintViolation(LtailError):
    """Family constraints are internally inconsistent."""


class BadTheta(LtailError):
    """Weight parameters violate the required ordering."""


# quadratic forms

class NotPSD(LtailError):
    """Matrix expected positive semidefinite is not."""


class DimMismatch(LtailError):
    """Matrix or vector dimensions disagree."""


class DimensionBlowup(LtailError):
    """Tensor-product dimension exceeds the hard cap."""
