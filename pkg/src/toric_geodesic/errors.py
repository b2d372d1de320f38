"""Exception hierarchy shared by all modules."""


class ToricGeodesicError(Exception):
    """Base class for every error raised by the package."""


class PolytopeError(ToricGeodesicError, ValueError):
    """Structural problem with a polytope (unbounded, empty, bad normals)."""


class UnsupportedInputError(ToricGeodesicError, ValueError):
    pass


class DomainError(ToricGeodesicError, ValueError):
    """Evaluation requested outside the open domain of a potential."""


class EvaluationError(ToricGeodesicError, ArithmeticError):
    """A scalar field returned a non-finite value; ``node`` holds the culprit."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConvexityError(ToricGeodesicError, ValueError):
    pass


class PreconditionError(ToricGeodesicError, ValueError):
    pass


class ConsistencyError(ToricGeodesicError, RuntimeError):
    """Two independent routes to the same quantity disagree."""


class ConditioningError(ToricGeodesicError, ArithmeticError):
    pass
