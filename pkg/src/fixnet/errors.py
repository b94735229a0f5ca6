"""Exception types shared across the package."""


class FixnetError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(FixnetError):
    """A closed-form construction was asked to run outside its stated
    parameter regime (e.g. the scale R below its admissible threshold)."""


class FeatureCountError(FixnetError):
    """The requested feature grid would exceed the supported size."""


class SolverError(FixnetError):
    """The linear solve failed even after the pivoted fallback."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class EstimatorError(FixnetError):
    """Fitting could not produce a usable estimator (e.g. every random
    direction trial failed)."""
