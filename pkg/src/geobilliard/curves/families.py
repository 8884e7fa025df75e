"""Built-in table families."""
import numpy as np

from ..exceptions import ConstructionError, NeighborhoodError, PreconditionError
from ..geometry.charts import EuclideanChart
from ..geometry.geodesics import _shoot_many
from .base import ArcPiece, BoundaryCurve, FourierPiece


def fourier_coeffs(samples, tol=1e-15):
    """Trigonometric coefficients of equally spaced periodic samples.

    Parameters
    ----------
    samples : ndarray, shape (N, 2)

    Returns
    -------
    cos_coeffs, sin_coeffs : ndarray, shape (K + 1, 2)
        Truncated after the last coefficient above ``tol`` times the largest.
    """
    N = samples.shape[0]
    X = np.fft.rfft(samples, axis=0) / N
    a = 2 * X.real
    b = -2 * X.imag
    a[0] *= 0.5
    b[0] = 0.0
    if N % 2 == 0:
        a[-1] *= 0.5
        b[-1] = 0.0
    mag = np.max(np.abs(np.concatenate([a, b], axis=1)), axis=1)
    keep = np.flatnonzero(mag > tol * np.max(mag))
    K = int(keep[-1]) + 1 if keep.size else 1
    return a[:K], b[:K]


def fourier_curve(chart, cos_coeffs, sin_coeffs, name="fourier", spec=None):
    """Curve from explicit trigonometric coefficients."""
    return BoundaryCurve(chart, [FourierPiece(cos_coeffs, sin_coeffs)], name=name,
                         spec=spec or {"kind": "fourier", "cos": np.asarray(cos_coeffs).tolist(),
                                       "sin": np.asarray(sin_coeffs).tolist()})


def polar_curve(chart, radius_fn, center=(0.0, 0.0), n=256, name="polar", spec=None):
    """Chart curve ``center + r(phi) (cos phi, sin phi)`` as a Fourier series."""
    phi = 2 * np.pi * np.arange(n) / n
    r = radius_fn(phi)
    pts = np.asarray(center, dtype=float) + r[:, None] * np.c_[np.cos(phi), np.sin(phi)]
    a, b = fourier_coeffs(pts)
    return fourier_curve(chart, a, b, name=name, spec=spec)


def perturbed_circle(chart=None, radius=1.0, perturbations=(), center=(0.0, 0.0)):
    """Chart-space circle with polar perturbations.

    ``r(phi) = radius * (1 + sum_m amp_m cos(m phi + phase_m))``.

    Parameters
    ----------
    perturbations : sequence of (mode, amplitude, phase)
    """
    chart = chart if chart is not None else EuclideanChart()
    perts = [(int(m), float(a), float(p)) for m, a, p in perturbations]
    top = max([m for m, _, _ in perts], default=1)

    def r(phi):
        out = np.ones_like(phi)
        for m, a, p in perts:
            out = out + a * np.cos(m * phi + p)
        return radius * out
    spec = {"kind": "fourier", "preset": "perturbed_circle", "radius": float(radius),
            "center": list(map(float, center)), "perturbations": [list(t) for t in perts]}
    return polar_curve(chart, r, center, n=max(64, 8 * (top + 2)), name="perturbed_circle", spec=spec)


def limacon_oval(chart=None, scale=1.0, flat_point=(0.0, 0.0), angle=0.0):
    """Convex limacon ``r = 1 - cos(phi)/2`` with a single zero-curvature point.

    Its Euclidean curvature is ``1.5 (1 - cos phi) / (r^2 + r'^2)^{3/2}``,
    vanishing only at ``phi = 0``.  The curve is translated so that the flat
    point sits at ``flat_point`` (also ``t = 0``), scaled by ``scale`` and
    rotated by ``angle``.
    """
    chart = chart if chart is not None else EuclideanChart()
    c, s = np.cos(angle), np.sin(angle)
    R = scale * np.array([[c, -s], [s, c]])
    # x = cos(phi) - 1/4 - cos(2 phi)/4 - 1/2, y = sin(phi) - sin(2 phi)/4
    A = np.array([[-0.75, 0.0], [1.0, 0.0], [-0.25, 0.0]])
    B = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, -0.25]])
    A, B = A @ R.T, B @ R.T
    A[0] += np.asarray(flat_point, dtype=float)
    spec = {"kind": "fourier", "preset": "limacon", "scale": float(scale),
            "flat_point": list(map(float, flat_point)), "angle": float(angle)}
    return fourier_curve(chart, A, B, name="limacon", spec=spec)


def make_geodesic_circle(chart, center, radius, tol=1e-14):
    """Geodesic circle: image of a round circle of ``T_center`` under exp.

    The image is sampled and expanded in a Fourier series whose length is
    doubled until the tail coefficients fall below ``tol`` (relative).
    """
    center = np.asarray(center, dtype=float)
    chart.check_point(center)
    if not 0 < radius < chart.normal_radius:
        raise NeighborhoodError(f"radius {radius} must lie in (0, normal_radius={chart.normal_radius})")
    e1, e2 = chart.orthonormal_frame(center)
    for n in (64, 128, 256, 512, 1024):
        phi = 2 * np.pi * np.arange(n) / n
        W = radius * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
        if chart.closed_form:
            from ..geometry.geodesics import exp_map
            pts = exp_map(chart, np.broadcast_to(center, W.shape), W)
        else:
            pts = _shoot_many(chart, np.broadcast_to(center, W.shape), W)
        X = np.fft.rfft(pts, axis=0) / n
        mag = np.max(np.abs(X), axis=1)
        if np.max(mag[n // 4:]) < tol * np.max(mag[1:]):
            break
    a, b = fourier_coeffs(pts, tol=tol * 1e-2)
    spec = {"kind": "geodesic_circle", "center": center.tolist(), "radius": float(radius)}
    return fourier_curve(chart, a, b, name="geodesic_circle", spec=spec)


def _circle_radius(model, kappa):
    if model.name == "flat":
        return 1.0 / kappa
    if model.name == "sphere":
        return np.arctan2(1.0, kappa)
    if kappa <= 1.0:
        raise PreconditionError("hyperbolic circles need geodesic curvature > 1")
    return np.arctanh(1.0 / kappa)


def _center_offsets(model, c, psi):
    """Axis offsets ``(a, b)`` of two circle centers at distance ``c``."""
    if model.name == "flat":
        return c * np.sin(psi), c * np.cos(psi)
    if model.name == "sphere":
        a = np.arcsin(np.sin(c) * np.sin(psi))
        return a, np.arccos(np.clip(np.cos(c) / np.cos(a), -1, 1))
    a = np.arcsinh(np.sinh(c) * np.sin(psi))
    return a, np.arccosh(np.cosh(c) / np.cosh(a))


def _chart_circle(chart, P, E1, E2, rho):
    """Chart center and radius of the geodesic circle (conformal charts map it to a circle)."""
    phi = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    dirs = np.cos(phi)[:, None] * E1 + np.sin(phi)[:, None] * E2
    z = chart.from_hom(chart.model.exp(np.broadcast_to(P, dirs.shape), dirs, rho))
    # circumcircle of three points
    (ax, ay), (bx, by), (cx, cy) = z
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    ctr = np.array([ux, uy])
    return ctr, float(np.linalg.norm(z[0] - ctr))


def make_two_arc_table(chart, kappa_minus, kappa_plus, psi=np.pi / 4):
    """Symmetric oval of four constant-curvature arcs joined C^1.

    Two arcs of curvature ``kappa_minus`` (the ends of the horizontal axis)
    alternate with two arcs of curvature ``kappa_plus`` (top and bottom).
    ``psi`` is the half-angle subtended by a ``kappa_plus`` arc in the flat
    case; it sets the position of the four joins.  The chart origin is the
    table center; the chart must be conformal with a closed-form model.

    Breakpoints at the starts of pieces 1 and 3 have left limit
    ``kappa_minus`` and right limit ``kappa_plus``.
    """
    if not (kappa_minus >= kappa_plus > 0):
        raise PreconditionError("need kappa_minus >= kappa_plus > 0")
    if chart.model is None or getattr(chart, "projection", "conformal") == "polar":
        raise PreconditionError("two-arc tables need a conformal closed-form chart")
    model = chart.model
    r, R = _circle_radius(model, kappa_minus), _circle_radius(model, kappa_plus)
    O = np.array([0.0, 0.0, 1.0])
    e1, e2 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    spec = {"kind": "two_arc", "kappa_minus": float(kappa_minus), "kappa_plus": float(kappa_plus),
            "psi": float(psi)}
    if np.isclose(kappa_minus, kappa_plus, rtol=1e-12, atol=0):
        ctr, rad = _chart_circle(chart, O, e1, e2, R)
        cuts = np.array([-(np.pi / 2 - psi), np.pi / 2 - psi, np.pi / 2 + psi, 3 * np.pi / 2 - psi,
                         2 * np.pi - (np.pi / 2 - psi)])
        pieces = [ArcPiece(ctr, rad, cuts[k], cuts[k + 1]) for k in range(4)]
        return BoundaryCurve(chart, pieces, name="two_arc", spec=spec)
    c = R - r
    a, b = _center_offsets(model, c, psi)
    circles = {}
    for key, ax, sgn, rho in (("right", e1, a, r), ("left", e1, -a, r),
                              ("top", e2, -b, R), ("bottom", e2, b, R)):
        d = np.sign(sgn) * ax
        P = model.exp(O, d, abs(sgn))
        E1 = model.exp_velocity(O, d, abs(sgn))
        E2 = e2 if ax is e1 else e1
        circles[key] = _chart_circle(chart, P, E1, E2, rho)

    def join(big, small):
        (cb, rb), (cs, _) = circles[big], circles[small]
        u = cs - cb
        return cb + rb * u / np.linalg.norm(u)

    J_rt, J_lt = join("top", "right"), join("top", "left")
    J_lb, J_rb = join("bottom", "left"), join("bottom", "right")
    for name, J, keys in (("right-top", J_rt, ("top", "right")), ("left-top", J_lt, ("top", "left")),
                          ("left-bottom", J_lb, ("bottom", "left")), ("right-bottom", J_rb, ("bottom", "right"))):
        for k in keys:
            ctr, rad = circles[k]
            if abs(np.linalg.norm(J - ctr) - rad) > 1e-9:
                raise ConstructionError(f"arcs fail to close at the {name} join")

    def ang(J, key):
        d = J - circles[key][0]
        return np.arctan2(d[1], d[0])

    def arc(key, J0, J1):
        a0, a1 = ang(J0, key), ang(J1, key)
        while a1 <= a0:
            a1 += 2 * np.pi
        return ArcPiece(circles[key][0], circles[key][1], a0, a1)

    pieces = [arc("right", J_rb, J_rt), arc("top", J_rt, J_lt),
              arc("left", J_lt, J_lb), arc("bottom", J_lb, J_rb)]
    return BoundaryCurve(chart, pieces, breakpoints=(0, 1, 2, 3), name="two_arc", spec=spec)


def make_support_oval_flat(rho, n=512, closure_tol=1e-10):
    """Euclidean oval with prescribed radius of curvature ``rho(phi)``.

    ``phi`` is the tangent direction; the position is
    ``z(phi) = int_0^phi rho(psi) exp(i psi) dpsi``, evaluated exactly on the
    Fourier expansion of ``rho``.

    Parameters
    ----------
    rho : callable or sequence of (k, a_k, b_k)
        ``rho(phi) = sum a_k cos(k phi) + b_k sin(k phi)`` when given as terms.

    Raises
    ------
    ConstructionError
        If ``int rho exp(i phi) dphi`` does not vanish (open curve) or
        ``rho`` is not positive.
    """
    if callable(rho):
        fn = rho
        spec_rho = None
    else:
        terms = [(int(k), float(a), float(b)) for k, a, b in rho]
        spec_rho = [list(t) for t in terms]

        def fn(phi):
            out = np.zeros_like(phi)
            for k, a, b in terms:
                out = out + a * np.cos(k * phi) + b * np.sin(k * phi)
            return out
    phi = 2 * np.pi * np.arange(n) / n
    r = fn(phi)
    if np.min(r) <= 0:
        raise ConstructionError(f"radius of curvature must be positive (min {np.min(r):.3g})")
    C = np.fft.fft(r) / n           # rho = sum C_k exp(i k phi)
    k = np.fft.fftfreq(n, 1.0 / n)
    gap = abs(2 * np.pi * C[k == -1][0])
    if gap > closure_tol * 2 * np.pi * abs(C[0]):
        raise ConstructionError(f"closure integral |int rho e^(i phi)| = {gap:.3e} does not vanish")
    # z = sum_k C_k e^{i(k+1)phi} / (i(k+1)), constant chosen so z(0) = 0
    m = k + 1
    keep = m != 0
    zk = np.zeros(n, dtype=complex)
    zk[keep] = C[keep] / (1j * m[keep])
    z = np.exp(1j * np.outer(phi, m[keep])) @ zk[keep]
    z = z - z[0]
    pts = np.c_[z.real, z.imag]
    a, b = fourier_coeffs(pts)
    spec = {"kind": "support_oval", "rho": spec_rho}
    return fourier_curve(EuclideanChart(), a, b, name="support_oval", spec=spec)
