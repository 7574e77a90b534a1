"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input -> 1, numerical
tolerance failure -> 2, I/O -> 3.
"""


class DomainError(ValueError):
    """Input outside the domain of an operation (bad parameter, point on the
    boundary, affine function not positive, non-unimodular matrix, ...)."""


class PolytopeValidationError(DomainError):
    """Vertex list does not describe a strictly convex polygon in hull order."""


class ToleranceError(RuntimeError):
    """Adaptive quadrature hit its depth/cell cap before reaching the
    requested tolerance.  Carries the best estimate obtained so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class EvaluationError(RuntimeError):
    """A pointwise field returned a non-finite value; carries the location."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
