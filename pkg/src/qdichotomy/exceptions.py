"""Exception hierarchy shared by every module of the package."""


class RejectedInputError(ValueError):
    """Input violates a precondition (shape, Hermiticity, trace, order...)."""


class SingularOperatorError(RejectedInputError):
    """A logarithm or negative power was requested on a singular operator."""


class HypothesisViolationError(RejectedInputError):
    """Support hypothesis of an exponent formula does not hold."""


class DimensionCapError(RejectedInputError):
    """Problem size exceeds the configured dimension cap."""

    def __init__(self, message, dims=None):
        super().__init__(message)
        self.dims = dims


class SolverError(RuntimeError):
    """Interior-point solver failed to converge.

    Carries the best primal and dual objective values seen so the caller can
    still report bounds.
    """

    def __init__(self, message, primal=None, dual=None, iterations=None):
        super().__init__(message)
        self.primal = primal
        self.dual = dual
        self.iterations = iterations
