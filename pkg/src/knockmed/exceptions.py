"""Error types raised by knockmed.

Argument-validation failures (bad q, bad threshold, out-of-range swap
indices, mismatched lengths) raise the standard ``ValueError`` /
``IndexError``; the classes below mark conditions that are properties of
the *data* rather than of the call.
"""


class KnockmedError(Exception):
    """Base class for knockmed-specific failures."""


class NonFiniteInputError(KnockmedError, ValueError):
    """An input array contains NaN or infinite entries."""


class NotPositiveSemidefiniteError(KnockmedError, ValueError):
    """A matrix required to be positive semidefinite is not."""


class DegenerateColumnError(KnockmedError, ValueError):
    """A column has zero variance (or zero norm) where that is not allowed."""


class CholeskyFailureError(KnockmedError, RuntimeError):
    """Cholesky factorization failed even after diagonal jitter."""


class SingularDesignError(KnockmedError, ValueError):
    """A regression design matrix is rank-deficient."""


class InsufficientRowsError(KnockmedError, ValueError):
    """Too few rows for the requested operation."""


class InsufficientColumnsError(KnockmedError, ValueError):
    """Too few columns for the requested operation."""


class NonBinaryExposureError(KnockmedError, ValueError):
    """The exposure is not binary and dichotomization was disabled."""
