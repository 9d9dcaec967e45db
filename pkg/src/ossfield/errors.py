"""Exception hierarchy shared by every module."""


class OssError(Exception):
    """Base class for library errors."""


class ValidationError(OssError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad tolerance."""


class DomainError(OssError, ValueError):
    """Input is well formed but outside the mathematical domain of the operation."""


class NumericError(OssError, ArithmeticError):
    """A numerical procedure failed to converge or produced unusable output."""


class ConditioningError(NumericError):
    """The problem is too ill-conditioned to resolve at the requested tolerance."""


class ModelError(OssError):
    """A covariance model is inconsistent (e.g. not positive semidefinite)."""
