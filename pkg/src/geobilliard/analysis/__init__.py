"""Theorem-level verifiers built on the billiard map."""
from ..reports import CertificateReport
from .caustics import (CausticScanResult, DetectedGraph, OrbitVerdict, caustic_scan, classify_orbit, graph_test,
                       ordering_violations)
from .certificates import (AsymptoticResidual, DiameterBound, GlancingResult, JacobiSignResult, as_table,
                           asymptotic_certificate, asymptotic_residual, diameter_bound_check, find_flat_point,
                           glancing_scan, mather_certificate, mather_jacobi_sign, measure_certificate,
                           polar_angle_rate, table_diameter, theta_samples, twist_certificate,
                           width_curve_verify)
from .hubacher import JumpRatioResult, descending_jumps, hubacher_certificate, hubacher_jump_ratio

__all__ = [
    "CertificateReport", "CausticScanResult", "DetectedGraph", "OrbitVerdict", "caustic_scan", "classify_orbit",
    "graph_test", "ordering_violations", "AsymptoticResidual", "DiameterBound", "GlancingResult",
    "JacobiSignResult", "as_table", "asymptotic_certificate", "asymptotic_residual", "diameter_bound_check",
    "find_flat_point", "glancing_scan", "mather_certificate", "mather_jacobi_sign", "measure_certificate",
    "polar_angle_rate", "table_diameter", "theta_samples", "twist_certificate", "width_curve_verify",
    "JumpRatioResult", "descending_jumps", "hubacher_certificate", "hubacher_jump_ratio",
]
