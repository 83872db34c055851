"""Exception hierarchy shared by all modules."""


class BiotError(Exception):
    """Base class for every error raised by :mod:`biotlab`."""


class UnsupportedConfig(BiotError):
    """Boundary configuration outside the supported cases."""


class ConfigError(BiotError):
    """Malformed run configuration or command-line flags."""


class SolverFailure(BiotError):
    """A linear solve could not be carried out."""


class SingularMatrix(SolverFailure):
    """Factorization met a zero pivot.

    ``pivot`` is the offending row/column index when it could be located.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class NotSPD(BiotError):
    """A matrix expected to be symmetric positive definite is not."""


class TooLarge(BiotError):
    """A dense computation was refused because it exceeds the size limit."""


class InteriorVertexViolation(BiotError):
    """A simplex has no vertex in the interior of the domain."""


class DegenerateGram(BiotError):
    """A Gram matrix is singular on the space it should norm."""
