"""Charts, metrics, geodesics and Jacobi fields."""
from .charts import (ConformalChart, ConformalPolyChart, Disc, EuclideanChart, Plane, PoincareDiscChart,
                     Rect, SpherePolarChart, StereographicSphereChart, SurfaceChart, brioschi_curvature,
                     pull_back, push_forward, validate_chart)
from .geodesics import (GeodesicState, GeodesicTrace, JacobiSolution, christoffel, distance, exp_differential_norm,
                        exp_map, integrate_geodesic, jacobi_endpoint, log_map, oriented_angle)
from .models import FLAT, HYPERBOLIC, SPHERE, FlatModel, HyperbolicModel, SphereModel

__all__ = [
    "ConformalChart", "ConformalPolyChart", "Disc", "EuclideanChart", "Plane", "PoincareDiscChart", "Rect",
    "SpherePolarChart", "StereographicSphereChart", "SurfaceChart", "brioschi_curvature", "pull_back",
    "push_forward", "validate_chart", "GeodesicState", "GeodesicTrace", "JacobiSolution", "christoffel",
    "distance", "exp_differential_norm", "exp_map", "integrate_geodesic", "jacobi_endpoint", "log_map",
    "oriented_angle", "FLAT", "HYPERBOLIC", "SPHERE", "FlatModel", "HyperbolicModel", "SphereModel",
]
