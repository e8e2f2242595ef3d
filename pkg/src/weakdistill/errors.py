"""Exception types raised across the package."""


class WeakDistillError(ValueError):
    pass


class NotHermitian(WeakDistillError):
    pass


class DimensionMismatch(WeakDistillError):
    pass


class InvalidState(WeakDistillError):
    """A value violates a density-matrix or Schmidt-state invariant."""


class ZeroProbabilityOutcome(WeakDistillError):
    pass


class AlreadyMaximal(WeakDistillError):
    """The input is already maximally entangled (alpha == beta)."""


class OrderingViolation(WeakDistillError):
    """An operation requiring beta > alpha got the opposite ordering."""


class RejectionBudgetExceeded(RuntimeError):
    def __init__(self, message: str, accepted: int = 0, rejections: int = 0):
        super().__init__(message)
        self.accepted = accepted
        self.rejections = rejections
