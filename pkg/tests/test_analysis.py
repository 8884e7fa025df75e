import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geobilliard import BilliardTable, CertificateReport
from geobilliard.analysis import (asymptotic_certificate, asymptotic_residual, caustic_scan, classify_orbit,
                                  descending_jumps, diameter_bound_check, find_flat_point, glancing_scan,
                                  graph_test, hubacher_certificate, hubacher_jump_ratio, mather_certificate,
                                  mather_jacobi_sign, measure_certificate, ordering_violations, theta_samples,
                                  twist_certificate, width_curve_verify)
from geobilliard.curves import make_geodesic_circle, make_two_arc_table, perturbed_circle, width_dual
from geobilliard.exceptions import PreconditionError
from geobilliard.geometry import EuclideanChart, StereographicSphereChart


# --- reports ------------------------------------------------------------------------------
def test_report_invariants():
    with pytest.raises(ValueError):
        CertificateReport("x", "fail")
    with pytest.raises(ValueError):
        CertificateReport("x", "inconclusive")
    r = CertificateReport("x", "inconclusive", reason="because", summary={"v": np.float64(np.inf)})
    assert r.exit_code == 3 and '"inf"' in r.to_json()


# --- twist ----------------------------------------------------------------------------------
def test_twist_circle(circle):
    rep = twist_certificate(circle, grid_n=8)
    assert rep.passed and rep.summary["min_ds2_dtheta1"] == pytest.approx(2.0, abs=1e-6)


def test_twist_two_arc_and_sphere(flat_two_arc, ovals):
    assert twist_certificate(flat_two_arc, grid_n=8).passed
    rep = twist_certificate(ovals["sphere"], grid_n=8)
    assert rep.passed and rep.summary["min_d12H"] > 0


# --- asymptotics ---------------------------------------------------------------------------
@pytest.mark.parametrize("family", ["flat", "sphere"])
def test_asymptotic_residual_decays(ovals, family):
    res = asymptotic_residual(ovals[family], 0.7)
    assert res.decreasing and res.r1[-1] < res.r1[1] and res.r1[-1] < 1e-2


def test_asymptotic_needs_positive_curvature(flat_limacon):
    with pytest.raises(PreconditionError):
        asymptotic_residual(flat_limacon, 0.0)


def test_asymptotic_certificate(ovals):
    assert asymptotic_certificate(ovals["hyperbolic"], s_list=[0.7, 3.0]).passed


# --- measure --------------------------------------------------------------------------------
def test_measure_certificate(ovals):
    rep = measure_certificate(ovals["sphere"], n=40)
    assert rep.passed and rep.summary["max_defect"] < 1e-6


# --- jump ratio at a curvature drop ------------------------------------------------------
def test_descending_jumps(flat_two_arc):
    curve = flat_two_arc.curve
    jumps = descending_jumps(curve)
    km, kp = curve.lateral_curvature(jumps)
    assert jumps.size == 2 and np.allclose(km, 4.0, rtol=1e-12) and np.allclose(kp, 1.0, rtol=1e-12)


@pytest.mark.parametrize("chart,km,kp", [(EuclideanChart(), 4.0, 1.0), (StereographicSphereChart(), 3.0, 2.0)])
def test_jump_ratio_limit(chart, km, kp):
    curve = make_two_arc_table(chart, km, kp)
    res = hubacher_jump_ratio(BilliardTable(curve), descending_jumps(curve)[0])
    assert res.rel_error < 1e-6
    assert res.limit == pytest.approx(np.sqrt(kp / km), rel=1e-6)


def test_flat_chord_identity(flat_two_arc):
    res = hubacher_jump_ratio(flat_two_arc, descending_jumps(flat_two_arc.curve)[0])
    assert np.max(res.chord_identity_defect) < 1e-8


def test_jump_ratio_rejects_rising_jump(flat_two_arc):
    curve = flat_two_arc.curve
    km, kp = curve.lateral_curvature(curve.breakpoints)
    rising = curve.breakpoints[km < kp][0]
    with pytest.raises(PreconditionError):
        hubacher_jump_ratio(flat_two_arc, rising)


def test_hubacher_certificate(flat_two_arc, circle):
    rep = hubacher_certificate(flat_two_arc)
    assert rep.passed and rep.summary["ratio"] == pytest.approx(0.5, rel=0.02)
    assert hubacher_certificate(circle).verdict == "inconclusive"


def test_jump_ratio_ode_probe_matches_closed():
    curve = make_two_arc_table(StereographicSphereChart(), 4.0, 1.0)
    s = descending_jumps(curve)[0]
    a = hubacher_jump_ratio(BilliardTable(curve), s, (0.04, 0.02))
    b = hubacher_jump_ratio(BilliardTable(curve, engine="ode"), s, (0.04, 0.02))
    assert np.allclose(a.a_plus, b.a_plus, atol=1e-8)


# --- Mather sign certificate ----------------------------------------------------------------
def test_theta_samples_contain_right_angle():
    th = theta_samples(180, 0.05)
    assert np.pi / 2 in th and th.size == 180 and th.min() == 0.05


def test_mather_flat_limacon(flat_limacon):
    s1 = find_flat_point(flat_limacon.curve)
    assert abs(s1) < 1e-8 or abs(s1 - flat_limacon.L) < 1e-8
    rep = mather_certificate(flat_limacon, s1, n_theta=40)
    assert rep.passed and rep.summary["min_B"] > 1e-8


def test_mather_jacobi_identity(hyperbolic_limacon):
    s1 = find_flat_point(hyperbolic_limacon.curve)
    res = mather_jacobi_sign(hyperbolic_limacon, s1 + 0.45 * hyperbolic_limacon.L, s1)
    assert res.defect < 1e-4 and res.sign_agrees and res.d22H > 0


def test_mather_requires_flat_point(ovals):
    with pytest.raises(PreconditionError):
        mather_certificate(ovals["flat"], 0.0)


def test_mather_width_table_fails_at_right_angle(width_table):
    rep = mather_certificate(width_table, 0.0, n_theta=30)
    assert rep.verdict == "fail"
    w = rep.witnesses[0]
    assert w["inputs"]["theta1"] == np.pi / 2 and w["values"]["B"] < 0


def test_width_table_jacobi_derivative_negative(width_table):
    res = mather_jacobi_sign(width_table, width_table.L / 2, 0.0)
    assert res.Jprime < 0 and res.Jprime == pytest.approx(np.cos(1.8), abs=1e-6)


# --- diameter bound and glancing orbits ------------------------------------------------
def test_diameter_bound(width_table):
    small = diameter_bound_check(make_geodesic_circle(StereographicSphereChart(), np.zeros(2), 0.3), n_exp=16)
    assert small.inside and small.diameter == pytest.approx(0.6, abs=1e-6)
    assert small.bound == pytest.approx(1.0, rel=0.1)
    big = diameter_bound_check(width_table, n_exp=16)
    assert not big.inside and big.diameter > 1.5
    flat = diameter_bound_check(make_geodesic_circle(EuclideanChart(), np.zeros(2), 1.0))
    assert flat.inside and np.isinf(flat.bound)


def test_glancing(width_table, flat_limacon):
    res = glancing_scan(width_table, [0.0, 1.0], 50, theta0=np.pi / 2)
    assert np.allclose(res.min_theta, np.pi / 2, atol=1e-8)
    res = glancing_scan(flat_limacon, [0.5], 2000, theta0=0.3)
    assert res.min_theta[0] < 0.3


# --- constant width verification ----------------------------------------------------------
def test_width_verify_passes(width_curve):
    rep = width_curve_verify(width_curve)
    assert rep.passed
    assert max(rep.summary["width_defect"], rep.summary["orthogonality_defect"],
               rep.summary["period_two_defect"]) < 1e-6


def test_width_verify_detects_shifted_dual(width_curve):
    bad = width_dual(width_curve, width_curve.lam + 1e-3)
    rep = width_curve_verify(bad, lam=width_curve.lam)
    assert rep.verdict == "fail"
    assert rep.summary["width_defect"] == pytest.approx(1e-3, rel=1e-6)


def test_width_verify_generic_table():
    circ = make_geodesic_circle(StereographicSphereChart(), np.zeros(2), 0.9)
    assert width_curve_verify(circ, lam=1.8, n=200, n_period=10).passed


# --- invariant-graph detection -----------------------------------------------------------
def test_graph_test_on_synthetic_data():
    s = np.linspace(0, 1, 500, endpoint=False)
    assert graph_test(s, 0.1 + 0.01 * np.sin(2 * np.pi * s), 1.0).passed
    noisy = np.random.default_rng(0).uniform(0, 0.2, 500)
    assert not graph_test(s, noisy, 1.0).passed


@given(st.floats(0.01, 0.49), st.integers(200, 2000))
def test_rigid_rotation_preserves_order(rho, n):
    s = rho * np.arange(n + 1)
    assert ordering_violations(s, 1.0) == 0


def test_shuffled_orbit_breaks_order():
    s = np.random.default_rng(1).uniform(0, 1, 500)
    assert ordering_violations(s, 1.0) > 0


def test_classify_needs_enough_bounces():
    s = 0.3 * np.arange(101)
    v = classify_orbit(s, np.full(101, 0.2), 1.0, 1e-9, min_bounces=1000)
    assert v.status == "inconclusive"


def test_caustics_on_circle(circle):
    res = caustic_scan(circle, n_orbits=4, n_bounces=2000, min_bounces=2000)
    assert res.n_detected == 4


def test_caustics_on_perturbed_circle():
    tab = BilliardTable(perturbed_circle(EuclideanChart(), 1.0, [(3, 0.01, 0.0)]))
    res = caustic_scan(tab, n_orbits=4, n_bounces=3000, min_bounces=3000)
    assert res.n_detected >= 1
    assert all(g.ordering_violations == 0 for g in res.detected_graphs)
