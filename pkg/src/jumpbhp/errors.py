"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An analytic knob is outside its admissible range."""


class SingularityError(ValueError):
    """A kernel was evaluated on its diagonal."""


class GeometryError(ValueError):
    """A point lies outside the window where a boundary chart is valid."""


class AccuracyError(RuntimeError):
    """Quadrature did not reach the requested tolerance.

    The best available estimate and the achieved (estimated) error are kept
    on the exception so callers can decide whether to accept them.
    """

    def __init__(self, message, best=None, achieved=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.achieved = achieved
        self.diagnostics = diagnostics or {}


class BudgetError(RuntimeError):
    """A simulated path used up its step budget before leaving the region."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
