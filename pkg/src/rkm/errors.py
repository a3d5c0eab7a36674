"""Exception types and process exit codes shared across the package."""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


class RkmError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(RkmError, ValueError):
    """Input violates a documented precondition or invariant."""

    exit_code = EXIT_VALIDATION


class ConvergenceError(RkmError, RuntimeError):
    """An iterative solver ran out of iterations; carries the last iterate."""

    exit_code = EXIT_CONVERGENCE

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class UnsupportedModelError(ValidationError):
    """Operation needs a model family the input does not belong to."""


class EmptySampleError(ValidationError):
    """A random sample came back empty even after one retry."""


class DegenerateSeparationError(ValidationError):
    """Component covariances differ only by scale, so the covariance signal
    vanishes.  Cluster on distances to the origin instead (radial_cluster)."""
