"""Constant-width curves on the unit sphere.

A half curve ``alpha`` is described in spherical coordinates
``(theta(t), phi(t))`` (longitude, colatitude) by degree-6 Bernstein
polynomials on ``t in [0, 1]`` and extended to ``[-1, 1]`` by
``theta(-t) = -theta(t)``, ``phi(-t) = phi(t)``.  The opposite half is the
parallel curve at distance ``lam = 2 phi1`` along the inward normal,
``beta = alpha cos(lam) + N sin(lam)``.  Together they bound a convex table
of constant width ``lam`` whose curvature vanishes at ``alpha(0)``.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize
from scipy.special import comb

from ..exceptions import ConstraintFailure, ConvergenceError, PreconditionError, RegularityError
from ..geometry.charts import StereographicSphereChart
from .base import BoundaryCurve, FunctionPiece

DEGREE = 6
# hand-tuned starting point for the free longitude coefficients a1..a5
SEED_A = np.array([0.05, 0.185, 0.302, 0.504, 1.337])


# --- truncated Taylor jets: arrays (K, ...) holding f, f', f'', ... ---------
def _jmul(f, g):
    K = min(len(f), len(g))
    out = np.zeros((K,) + np.broadcast_shapes(f.shape[1:], g.shape[1:]))
    for n in range(K):
        for k in range(n + 1):
            out[n] = out[n] + comb(n, k) * f[k] * g[n - k]
    return out


def _jcompose(h, d):
    """Jet of ``F(h)`` given ``d[k] = F^(k)(h[0])`` (up to third order)."""
    K = len(h)
    out = np.zeros_like(h)
    out[0] = d[0]
    if K > 1:
        out[1] = d[1] * h[1]
    if K > 2:
        out[2] = d[2] * h[1] ** 2 + d[1] * h[2]
    if K > 3:
        out[3] = d[3] * h[1] ** 3 + 3 * d[2] * h[1] * h[2] + d[1] * h[3]
    if K > 4:
        raise ValueError("jets are limited to third order")
    return out


def _jsin(h):
    s, c = np.sin(h[0]), np.cos(h[0])
    return _jcompose(h, [s, c, -s, -c])


def _jcos(h):
    s, c = np.sin(h[0]), np.cos(h[0])
    return _jcompose(h, [c, -s, -c, s])


def _jrecip(h):
    x = h[0]
    return _jcompose(h, [1 / x, -1 / x**2, 2 / x**3, -6 / x**4])


def _jsqrt(h):
    x = h[0]
    r = np.sqrt(x)
    return _jcompose(h, [r, 0.5 / r, -0.25 / (x * r), 0.375 / (x * x * r)])


def _vdot(a, b):
    return sum(_jmul(a[..., i], b[..., i]) for i in range(3))


def _vcross(a, b):
    out = [_jmul(a[..., (i + 1) % 3], b[..., (i + 2) % 3]) - _jmul(a[..., (i + 2) % 3], b[..., (i + 1) % 3])
           for i in range(3)]
    return np.stack(out, axis=-1)


def _scale(s, v):
    return _jmul(s[..., None], v)


def _deriv(j):
    return j[1:]


# --- Bernstein helpers ------------------------------------------------------
def bernstein_to_power(c):
    """Power-basis coefficients (ascending) of ``sum c_k B_k^6(t)``."""
    p = np.zeros(DEGREE + 1)
    for k, ck in enumerate(c):
        q = P.polymul([0] * k + [1], P.polypow([1, -1], DEGREE - k)) * comb(DEGREE, k)
        p = P.polyadd(p, ck * q)[: DEGREE + 1]
    return p


def constrained_coefficients(a_free, phi0, phi1, p4_variant="derived"):
    """Complete Bernstein coefficients from the five free longitude coefficients.

    Imposes ``theta(0) = 0``, ``theta(1) = pi/2``, ``phi(0) = phi0``,
    ``phi(1) = phi1``, ``phi'(0) = phi'(1) = 0``, ``phi''(1) = 0``, the
    zero-curvature condition at ``t = 0`` and ``phi'''(0) = 3 theta' theta''
    sin(phi0) cos(phi0)``.

    ``p4_variant="derived"`` uses ``phi''(0) = theta'(0)^2 sin(phi0) cos(phi0)``,
    which is what ``kappa(0) = 0`` requires; ``"as_printed"`` uses
    ``phi''(0) = theta'(0) cos(phi1) sin(phi1)``.
    """
    a = np.r_[0.0, np.asarray(a_free, dtype=float), np.pi / 2]
    tp0 = 6 * (a[1] - a[0])
    tpp0 = 30 * (a[2] - 2 * a[1] + a[0])
    b = np.zeros(DEGREE + 1)
    b[0] = b[1] = phi0
    b[4] = b[5] = b[6] = phi1
    if p4_variant == "derived":
        pp0 = tp0**2 * np.sin(phi0) * np.cos(phi0)
    elif p4_variant == "as_printed":
        pp0 = tp0 * np.cos(phi1) * np.sin(phi1)
    else:
        raise ValueError(f"unknown p4_variant {p4_variant!r}")
    b[2] = b[0] + pp0 / 30
    p3 = 3 * tp0 * tpp0 * np.sin(phi0) * np.cos(phi0)
    b[3] = p3 / 120 + 3 * b[2] - 3 * b[1] + b[0]
    return a, b


def _poly_jet(p, t, K=4):
    out = np.empty((K,) + np.shape(t))
    q = p
    for k in range(K):
        out[k] = P.polyval(t, q)
        q = P.polyder(q)
    return out


def spherical_curvature(theta, phi):
    """Geodesic curvature from the (theta, phi) jets, in the closed form

    ``kappa v^3 = theta' cos(phi) (theta'^2 sin^2 phi + 2 phi'^2)
    - (theta' phi'' - theta'' phi') sin(phi)``,
    ``v^2 = phi'^2 + sin^2(phi) theta'^2``.
    """
    th1, th2 = theta[1], theta[2]
    ph, ph1, ph2 = phi[0], phi[1], phi[2]
    num = th1 * np.cos(ph) * (th1**2 * np.sin(ph) ** 2 + 2 * ph1**2) - (th1 * ph2 - th2 * ph1) * np.sin(ph)
    v = np.sqrt(ph1**2 + np.sin(ph) ** 2 * th1**2)
    return num / v**3


def _half_jets(a, b, t, K=4):
    pa, pb = bernstein_to_power(a), bernstein_to_power(b)
    return _poly_jet(pa, t, K), _poly_jet(pb, t, K)


def _kappa_on_grid(a, b, t):
    th, ph = _half_jets(a, b, t, 3)
    return spherical_curvature(th, ph), th, ph


def _speed(th, ph):
    return np.sqrt(ph[1] ** 2 + np.sin(ph[0]) ** 2 * th[1] ** 2)


def solve_width_coefficients(phi0, phi1, p4_variant="derived", n_grid=201, min_dtheta=0.3,
                             cap_margin=0.05, seed=None):
    """Choose the free Bernstein coefficients.

    Stage 1 maximizes a margin ``m`` with ``kappa(t) >= m t^2`` subject to
    ``kappa <= -tan(lam)``, ``theta' >= min_dtheta`` and
    ``phi <= pi/2 - cap_margin``; stage 2 minimizes ``int (dkappa/ds)^2 ds``
    keeping ``kappa >= m t^2 / 2`` and the other bounds.  Both stages use
    SLSQP.

    Returns
    -------
    a, b : ndarray
        Bernstein coefficients of ``theta`` and ``phi``.
    """
    lam = 2 * phi1
    kmax = -np.tan(lam) * (1 - 1e-3)   # keep a little slack below the bound
    t = np.linspace(0, 1, n_grid)
    tp = t[1:]
    x0 = np.asarray(seed if seed is not None else SEED_A, dtype=float)

    def parts(x):
        a, b = constrained_coefficients(x[:5], phi0, phi1, p4_variant)
        k, th, ph = _kappa_on_grid(a, b, t)
        return k, th, ph

    def common(x):
        k, th, ph = parts(x)
        return np.r_[kmax - k, th[1] - min_dtheta, np.pi / 2 - cap_margin - ph[0]]

    # stage 1: margin
    def c1(y):
        k, _, _ = parts(y[:5])
        return np.r_[k[1:] / tp**2 - y[5], common(y[:5])]
    res1 = minimize(lambda y: -y[5], np.r_[x0, 0.0], method="SLSQP",
                    constraints=[{"type": "ineq", "fun": c1}],
                    options={"maxiter": 500, "ftol": 1e-12})
    m = res1.x[5]
    if not np.all(c1(res1.x) > -1e-6) or m <= 0:
        raise ConvergenceError(f"no admissible width curve found for phi0={phi0}, phi1={phi1} "
                               f"(best margin {m:.3g})", float(-m))

    # stage 2: smoothness
    def energy(x):
        k, th, ph = parts(x)
        v = _speed(th, ph)
        dk = np.gradient(k, t)
        f = dk**2 / v
        return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(t)))

    def c2(x):
        k, _, _ = parts(x)
        return np.r_[k[1:] / tp**2 - 0.5 * m, common(x)]
    res2 = minimize(energy, res1.x[:5], method="SLSQP", constraints=[{"type": "ineq", "fun": c2}],
                    options={"maxiter": 500, "ftol": 1e-14})
    x = res2.x if np.all(c2(res2.x) > -1e-6) else res1.x[:5]
    return constrained_coefficients(x, phi0, phi1, p4_variant)


@dataclass
class WidthCurveSpec:
    """Parameters of a constant-width curve (``lam = 2 phi1``)."""

    phi0: float = 1.40
    phi1: float = 0.90
    p4_variant: str = "derived"
    a: np.ndarray = field(default=None, repr=False)
    b: np.ndarray = field(default=None, repr=False)

    @property
    def lam(self):
        return 2 * self.phi1

    def to_dict(self):
        return {"kind": "width_sphere", "phi0": self.phi0, "phi1": self.phi1, "p4_variant": self.p4_variant,
                "a": None if self.a is None else list(map(float, self.a)),
                "b": None if self.b is None else list(map(float, self.b))}


class WidthCurve:
    """Half curve ``alpha``, its dual ``beta`` and the assembled table.

    Parameters
    ----------
    spec : WidthCurveSpec
        Coefficients must be filled in (see :func:`construct_width_curve`).
    lam : float, optional
        Distance used for the dual curve; defaults to ``spec.lam``.  A
        different value produces a deliberately inconsistent table (for
        fault-injection tests).
    """

    def __init__(self, spec, lam=None, chart=None):
        self.spec = spec
        self.lam = spec.lam if lam is None else float(lam)
        self._pa = bernstein_to_power(spec.a)
        self._pb = bernstein_to_power(spec.b)
        self.chart = chart if chart is not None else StereographicSphereChart()
        self._table = None

    # ambient jets ----------------------------------------------------------
    def angle_jets(self, t, K=4):
        """Jets of ``(theta, phi)`` on ``[-1, 1]`` using the symmetry."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        sgn = np.where(t < 0, -1.0, 1.0)
        ta = np.abs(t)
        th, ph = _poly_jet(self._pa, ta, K), _poly_jet(self._pb, ta, K)
        # theta odd, phi even: d^k/dt^k picks sgn^(k+1) resp. sgn^k
        for k in range(K):
            th[k] = th[k] * sgn ** (k + 1)
            ph[k] = ph[k] * sgn**k
        return th, ph

    def alpha_jet(self, t, K=4):
        th, ph = self.angle_jets(t, K)
        sp, cp, st, ct = _jsin(ph), _jcos(ph), _jsin(th), _jcos(th)
        return np.stack([_jmul(sp, ct), _jmul(sp, st), cp], axis=-1)

    def normal_jet(self, t, K=3):
        X = self.alpha_jet(t, K + 1)
        Xd = _deriv(X)
        v = _jsqrt(_vdot(Xd, Xd))
        T = _scale(_jrecip(v), Xd)
        return _vcross(X[:K], T)

    def beta_jet(self, t, K=3):
        X = self.alpha_jet(t, K + 1)[:K]
        N = self.normal_jet(t, K)
        return np.cos(self.lam) * X + np.sin(self.lam) * N

    def alpha(self, t):
        return self.alpha_jet(t, 1)[0]

    def beta(self, t):
        return self.beta_jet(t, 1)[0]

    @staticmethod
    def ambient_curvature(Y):
        """Geodesic curvature ``det(Y, Y', Y'') / |Y'|^3`` on the unit sphere."""
        det = np.einsum("ni,ni->n", Y[0], np.cross(Y[1], Y[2]))
        return det / np.linalg.norm(Y[1], axis=-1) ** 3

    def kappa_alpha(self, t):
        return self.ambient_curvature(self.alpha_jet(t, 3))

    def kappa_beta(self, t):
        return self.ambient_curvature(self.beta_jet(t, 3))

    def kappa_beta_formula(self, t):
        k = self.kappa_alpha(t)
        lam = self.lam
        return -(np.sin(lam) + k * np.cos(lam)) / (np.cos(lam) - k * np.sin(lam))

    # chart pieces ----------------------------------------------------------
    def _chart_jet(self, Y):
        """Stereographic chart jet (order <= 2) of an ambient jet."""
        den = Y[..., 2].copy()
        den[0] += 1.0
        inv = _jrecip(den)
        return np.stack([_jmul(Y[..., 0], inv), _jmul(Y[..., 1], inv)], axis=-1)

    def _piece(self, which, lo, hi):
        def fn(u, order):
            t = lo + (hi - lo) * u
            Y = (self.alpha_jet(t, order + 1)[: order + 1] if which == "alpha"
                 else self.beta_jet(t, order + 1))
            out = self._chart_jet(Y)
            return out * ((hi - lo) ** np.arange(order + 1))[:, None, None]
        return FunctionPiece(fn)

    def table(self):
        """Boundary curve ``alpha[-1,0], alpha[0,1], beta[-1,0], beta[0,1]`` (t = 0 at alpha(0))."""
        if self._table is None:
            pieces = [self._piece("alpha", -1, 0), self._piece("alpha", 0, 1),
                      self._piece("beta", -1, 0), self._piece("beta", 0, 1)]
            curve = BoundaryCurve(self.chart, pieces, name="width_sphere", spec=self.spec.to_dict())
            # rotate the parameter so that s = 0 sits at alpha(0)
            self._table = _shift_start(curve, 1)
        return self._table

    def alpha_s(self, t):
        """Table arclength of ``alpha(t)``."""
        tab = self.table()
        return np.where(t >= 0, tab.offsets[0] + tab._integral[0](np.clip(t, 0, 1)),
                        tab.offsets[3] + tab._integral[3](np.clip(1 + t, 0, 1)))

    def beta_s(self, t):
        """Table arclength of ``beta(t)``."""
        tab = self.table()
        return np.where(t < 0, tab.offsets[1] + tab._integral[1](np.clip(1 + t, 0, 1)),
                        tab.offsets[2] + tab._integral[2](np.clip(t, 0, 1)))


def _shift_start(curve, k):
    pieces = curve.pieces[k:] + curve.pieces[:k]
    return BoundaryCurve(curve.chart, pieces, name=curve.name, spec=curve.spec)


def check_property5(width, n=2001):
    """Violations of ``0 <= kappa <= -tan(lam)`` on a dense ``t`` grid of ``alpha``."""
    t = np.linspace(-1, 1, n)
    k = width.kappa_alpha(t)
    s = width.alpha_s(t)
    kmax = -np.tan(width.lam)
    bad = (k < -1e-10) | (k > kmax + 1e-10)
    return [(float(si), float(ki)) for si, ki in zip(s[bad], k[bad])]


def width_dual(width, lam=None):
    """Dual half curve at distance ``lam`` (defaults to the spec width).

    Returns a :class:`WidthCurve` sharing ``alpha`` whose ``beta`` is
    ``alpha cos(lam) + N sin(lam)``.

    Raises
    ------
    RegularityError
        If ``cos(lam) - kappa sin(lam) >= 0`` somewhere on ``alpha``.
    """
    lam = width.lam if lam is None else float(lam)
    k = width.kappa_alpha(np.linspace(-1, 1, 2001))
    if np.any(np.cos(lam) - k * np.sin(lam) >= 0):
        raise RegularityError("dual curve is irregular: cos(lam) - kappa sin(lam) >= 0 somewhere")
    return WidthCurve(width.spec, lam=lam, chart=width.chart)


def construct_width_curve(phi0=1.40, phi1=0.90, p4_variant="derived", coeffs=None):
    """Build the constant-width table of width ``2 phi1``.

    Parameters
    ----------
    phi0, phi1 : float
        Colatitudes of ``alpha(0)`` and ``alpha(+-1)``; need
        ``pi/2 > phi0 > phi1 > pi/4``.
    p4_variant : {"derived", "as_printed"}
        Form of the second-derivative condition at ``t = 0``.
    coeffs : tuple of arrays, optional
        Explicit ``(a, b)`` Bernstein coefficients (skips the solve).

    Returns
    -------
    WidthCurve
        ``.table()`` is the assembled :class:`BoundaryCurve`.

    Raises
    ------
    PreconditionError, ConvergenceError, ConstraintFailure
    """
    if not (np.pi / 2 > phi0 > phi1 > np.pi / 4):
        raise PreconditionError("need pi/2 > phi0 > phi1 > pi/4")
    if coeffs is None:
        a, b = solve_width_coefficients(phi0, phi1, p4_variant)
    else:
        a, b = map(np.asarray, coeffs)
    spec = WidthCurveSpec(phi0, phi1, p4_variant, a, b)
    w = WidthCurve(spec)
    bad = check_property5(w)
    if bad:
        raise ConstraintFailure(f"curvature leaves [0, -tan(lam)] at {len(bad)} samples", bad)
    width_dual(w)
    return w
