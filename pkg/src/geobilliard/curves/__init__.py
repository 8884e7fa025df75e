"""Table boundaries: representation, families, convexity and the constant-width construction."""
from .base import (ArcPiece, BoundaryCurve, CurvePiece, FourierPiece, FunctionPiece, geodesic_curvature,
                   normal_chart_curvature, reparametrize_arclength)
from .convexity import BoundaryProjector, convexity_certificate, curvature_profile
from .families import (fourier_curve, limacon_oval, make_geodesic_circle, make_support_oval_flat,
                       make_two_arc_table, perturbed_circle, polar_curve)
from .width import (WidthCurve, WidthCurveSpec, check_property5, constrained_coefficients, construct_width_curve,
                    spherical_curvature, width_dual)

__all__ = [
    "ArcPiece", "BoundaryCurve", "CurvePiece", "FourierPiece", "FunctionPiece", "geodesic_curvature",
    "normal_chart_curvature", "reparametrize_arclength", "BoundaryProjector", "convexity_certificate",
    "curvature_profile", "fourier_curve", "limacon_oval", "make_geodesic_circle", "make_support_oval_flat",
    "make_two_arc_table", "perturbed_circle", "polar_curve", "WidthCurve", "WidthCurveSpec",
    "check_property5", "constrained_coefficients", "construct_width_curve", "spherical_curvature", "width_dual",
]
