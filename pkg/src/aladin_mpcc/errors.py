"""Exception types shared across the solver stack."""


class AladinError(Exception):
    """Base class for solver errors."""


class BarrierDomainError(AladinError):
    """A barrier term was evaluated at or beyond its domain boundary."""

    def __init__(self, message: str, coordinate: int | None = None):
        super().__init__(message)
        self.coordinate = coordinate


class InnerSolverFailure(AladinError):
    """An inner Newton solve ran out of iterations or stalled in line search."""


class LinearSolverSingular(AladinError):
    """A factorization failed, or regularization exceeded its shift budget."""

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index
