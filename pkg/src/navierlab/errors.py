"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class PreconditionViolation(ValueError):
    pass


class HypothesisViolation(ValueError):
    """Problem data breaks one of the existence hypotheses (sign, window, integrability)."""


class InternalConsistencyError(RuntimeError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, message, best_residual=float("nan"), trace=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.trace = trace


class DegenerateLinearization(NoConvergence):
    def __init__(self, message, best_residual=float("nan"), tau=None):
        super().__init__(message, best_residual)
        self.tau = tau


class ContinuationFailure(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
