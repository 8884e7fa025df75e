import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geobilliard.exceptions import DomainError
from geobilliard.geometry import (SPHERE, ConformalPolyChart, Disc, EuclideanChart, PoincareDiscChart,
                                  SpherePolarChart, StereographicSphereChart, brioschi_curvature, christoffel,
                                  distance, exp_map, integrate_geodesic, jacobi_endpoint, log_map, oriented_angle,
                                  validate_chart)

from oracles import GREAT_CIRCLE_D, JACOBI_R2, POINCARE_RADIUS_T13, POLAR_G1_22_PI4, POLAR_G2_12_PI4

coord = st.floats(-0.5, 0.5, allow_nan=False)


def unit(chart, p, v):
    v = np.asarray(v, float)
    return v / float(chart.norm(np.asarray(p, float), v))


def test_flat_christoffel_vanish():
    G = christoffel(EuclideanChart(), [0.3, -1.2])
    assert np.all(G == 0)


def test_polar_sphere_christoffel_by_hand():
    G = christoffel(SpherePolarChart(), [np.pi / 4, 0.7])
    assert G[0, 1, 1] == pytest.approx(POLAR_G1_22_PI4, abs=1e-14)
    assert G[1, 0, 1] == pytest.approx(POLAR_G2_12_PI4, abs=1e-14)
    assert np.allclose(G, np.swapaxes(G, 1, 2))


def test_flat_geodesic_straight_line():
    tr = integrate_geodesic(EuclideanChart(), [0.0, 0.0], [1.0, 0.0], 1.0)
    assert np.allclose(tr.end.point, [1.0, 0.0], atol=1e-12)


def test_poincare_radial_geodesic():
    tr = integrate_geodesic(PoincareDiscChart(), [0.0, 0.0], [0.5, 0.0], 1.3)
    assert np.hypot(*tr.end.point) == pytest.approx(POINCARE_RADIUS_T13, abs=1e-10)


def test_domain_exit_is_flagged():
    ch = StereographicSphereChart()
    p = np.array([0.5, 0.0])
    tr = integrate_geodesic(ch, p, unit(ch, p, [1.0, 0.0]), 3.0)
    assert tr.exited and tr.exit_point is not None
    assert tr.length < 3.0


def test_exp_flat_is_translation():
    out = exp_map(EuclideanChart(), np.array([1.0, 2.0]), np.array([0.5, -1.0]))
    assert np.allclose(out, [1.5, 1.0])


def test_log_flat_is_difference():
    assert np.allclose(log_map(EuclideanChart(), np.array([1.0, 2.0]), np.array([3.0, 1.0])), [2.0, -1.0])


def test_sphere_distance_great_circle():
    ch = SpherePolarChart()
    d = distance(ch, np.array([0.3, 0.2]), np.array([1.1, -0.9]))
    assert float(np.ravel(d)[0]) == pytest.approx(GREAT_CIRCLE_D, abs=1e-12)


def test_oriented_angle_quarter_turn():
    assert oriented_angle(EuclideanChart(), [0, 0], [1, 0], [0, 1]) == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("make", [EuclideanChart, StereographicSphereChart, PoincareDiscChart])
@given(x=coord, y=coord, a=coord, b=coord)
def test_exp_log_round_trip(make, x, y, a, b):
    ch = make()
    p, q = np.array([x, y]), np.array([a, b])
    w = log_map(ch, p, q)
    assert np.allclose(exp_map(ch, p, w), q, atol=1e-9)


@pytest.mark.parametrize("make", [StereographicSphereChart, PoincareDiscChart])
def test_closed_form_and_ode_exp_agree(make):
    ch = make()
    rng = np.random.default_rng(1)
    P = rng.uniform(-0.3, 0.3, (8, 2))
    W = rng.uniform(-0.3, 0.3, (8, 2))
    assert np.allclose(exp_map(ch, P, W, method="ode"), exp_map(ch, P, W), atol=1e-10)


def test_ode_log_on_polynomial_metric():
    ch = ConformalPolyChart([(2, 0, 0.1), (0, 2, 0.05)], Disc(1.0))
    p, q = np.array([0.1, -0.2]), np.array([-0.3, 0.25])
    w = log_map(ch, p, q)
    assert np.allclose(exp_map(ch, p, w), q, atol=1e-9)


def test_validate_polynomial_chart():
    rep = validate_chart(ConformalPolyChart([(2, 0, 0.1), (0, 2, 0.05)], Disc(1.0)))
    assert rep["min_eig"] > 0 and rep["grad_rel_err"] < 1e-6 and rep["curvature_err"] < 1e-5


@pytest.mark.parametrize("make,K", [(EuclideanChart, 0.0), (StereographicSphereChart, 1.0),
                                    (PoincareDiscChart, -1.0)])
def test_brioschi_matches_analytic_curvature(make, K):
    pts = np.array([[0.1, 0.2], [-0.3, 0.05]])
    assert np.allclose(brioschi_curvature(make(), pts), K, atol=1e-5)


def _jacobi_start(K):
    if K == 1:
        ch = StereographicSphereChart()
        p = np.array([np.tan(0.5), 0.0])  # colatitude 1, heading over the pole
        return ch, p, unit(ch, p, [-1.0, 0.0])
    ch = EuclideanChart() if K == 0 else PoincareDiscChart()
    p = np.array([-np.tanh(0.5), 0.0]) if K == -1 else np.zeros(2)
    return ch, p, unit(ch, p, [1.0, 0.0])


@pytest.mark.parametrize("K", [0, 1, -1])
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_jacobi_closed_forms(K, r):
    ch, p, v = _jacobi_start(K)
    tr = integrate_geodesic(ch, p, v, r, jacobi=True)
    sol = jacobi_endpoint(ch, tr)
    ref = {0: (r, 1.0), 1: (np.sin(r), np.cos(r)), -1: (np.sinh(r), np.cosh(r))}[K]
    assert abs(sol.J - ref[0]) < 1e-8 and abs(sol.Jprime - ref[1]) < 1e-8
    if r == 2.0:
        assert abs(sol.J - JACOBI_R2[K][0]) < 1e-8 and abs(sol.Jprime - JACOBI_R2[K][1]) < 1e-8


def test_jacobi_from_trace_without_augmented_state():
    ch, p, v = _jacobi_start(-1)
    sol = jacobi_endpoint(ch, integrate_geodesic(ch, p, v, 2.0))
    assert abs(sol.J - JACOBI_R2[-1][0]) < 1e-8


def test_point_outside_domain_rejected():
    with pytest.raises(DomainError):
        exp_map(PoincareDiscChart(), np.array([1.2, 0.0]), np.array([0.1, 0.0]))


def test_sphere_model_distance_matches_arccos():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 3))
    Y = rng.normal(size=(20, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    ref = np.arccos(np.clip(np.sum(X * Y, axis=1), -1, 1))
    assert np.allclose(SPHERE.dist(X, Y), ref, atol=1e-12)
