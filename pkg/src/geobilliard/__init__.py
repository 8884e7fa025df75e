"""Billiards on convex tables in totally normal neighborhoods of Riemannian surfaces."""
from . import analysis, curves, geometry
from .billiard import (BilliardTable, Chord, LiftedOrbit, PhasePoint, RotationEstimate, H_partials, billiard_map,
                       generating_H, inverse_map, iterate, iterate_many, map_jacobian, measure_jacobian_check,
                       rotation_number)
from .exceptions import (ConstraintFailure, ConstructionError, ConvergenceError, DomainError, GeoBilliardError,
                         GeometryError, GrazingError, NeighborhoodError, PreconditionError, RegularityError,
                         StepDegeneracyError)
from .reports import CertificateReport

__version__ = "0.1.0"

__all__ = [
    "analysis", "curves", "geometry", "BilliardTable", "Chord", "LiftedOrbit", "PhasePoint", "RotationEstimate",
    "H_partials", "billiard_map", "generating_H", "inverse_map", "iterate", "iterate_many", "map_jacobian",
    "measure_jacobian_check", "rotation_number", "ConstraintFailure", "ConstructionError", "ConvergenceError",
    "DomainError", "GeoBilliardError", "GeometryError", "GrazingError", "NeighborhoodError", "PreconditionError",
    "RegularityError", "StepDegeneracyError", "CertificateReport",
]
