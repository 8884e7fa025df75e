"""Exception hierarchy shared by all modules."""


class GeoBilliardError(Exception):
    """Base class for every error raised by the package."""


class DomainError(GeoBilliardError, ValueError):
    """A point lies outside the chart domain."""


class NeighborhoodError(GeoBilliardError, ValueError):
    """A request leaves the declared totally normal neighborhood."""


class ConvergenceError(GeoBilliardError, RuntimeError):
    """An iterative solve did not converge.

    Attributes
    ----------
    residual : float
        Last residual norm reached by the solver.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class RegularityError(GeoBilliardError, ValueError):
    """A parametrization degenerates (vanishing speed, irregular dual curve)."""


class ConstructionError(GeoBilliardError, ValueError):
    """A curve could not be built from the requested data."""


class PreconditionError(GeoBilliardError, ValueError):
    """Inputs violate a documented precondition."""


class ConstraintFailure(GeoBilliardError, ValueError):
    """A constructed object violates a required inequality.

    Attributes
    ----------
    violations : list
        Offending (location, value) pairs.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class GeometryError(GeoBilliardError, RuntimeError):
    """Table and chart are inconsistent (e.g. a chord never hits the boundary)."""


class GrazingError(GeoBilliardError, ValueError):
    """Outgoing angle below the grazing cutoff."""


class StepDegeneracyError(GeoBilliardError, ValueError):
    """Finite-difference stencil would collapse (points too close)."""
