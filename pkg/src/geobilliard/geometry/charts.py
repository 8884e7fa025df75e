"""Planar charts carrying a Riemannian metric.

Every chart exposes the metric ``g`` (shape ``(..., 2, 2)``), its first
partials ``dg[..., k, i, j] = d_k g_ij`` and the Gaussian curvature, all
analytic.  Charts of the three constant-curvature geometries also carry a
closed-form ambient model (see :mod:`geobilliard.geometry.models`), which the
geodesic and billiard code use as a fast exact path.
"""
import numpy as np

from ..exceptions import DomainError
from .models import FLAT, HYPERBOLIC, SPHERE


def as_points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError(f"expected trailing dimension 2, got shape {x.shape}")
    return x


class Disc:
    """Open disc ``|x - center| < radius``."""

    def __init__(self, radius, center=(0.0, 0.0)):
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)

    def margin(self, x):
        return self.radius - np.linalg.norm(x - self.center, axis=-1)

    def sample(self, n, rng, shrink=0.9):
        r = self.radius * shrink * np.sqrt(rng.uniform(size=n))
        a = rng.uniform(0, 2 * np.pi, size=n)
        return self.center + np.c_[r * np.cos(a), r * np.sin(a)]

    def to_spec(self):
        return {"disc": [float(self.center[0]), float(self.center[1]), self.radius]}


class Rect:
    """Open rectangle ``lo < x < hi`` componentwise."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)

    def margin(self, x):
        return np.minimum(np.min(x - self.lo, axis=-1), np.min(self.hi - x, axis=-1))

    def sample(self, n, rng, shrink=0.9):
        mid, half = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo) * shrink
        return mid + half * rng.uniform(-1, 1, size=(n, 2))

    def to_spec(self):
        return {"rect": [*map(float, self.lo), *map(float, self.hi)]}


class Plane:
    """The whole plane."""

    def margin(self, x):
        return np.full(np.shape(x)[:-1], np.inf)

    def sample(self, n, rng, shrink=0.9):
        return rng.uniform(-shrink, shrink, size=(n, 2))

    def to_spec(self):
        return {"plane": []}


class SurfaceChart:
    """A metric on a planar chart domain.

    Parameters
    ----------
    metric, metric_grad, gauss_curvature : callable
        Vectorized functions of points ``(..., 2)`` returning ``(..., 2, 2)``,
        ``(..., 2, 2, 2)`` (``[k, i, j] = d_k g_ij``) and ``(...)``.
    domain : Disc, Rect or Plane
    normal_radius : float
        Declared bound on geodesic lengths inside the totally normal
        neighborhood.
    """

    kind = "generic"
    model = None

    def __init__(self, metric=None, metric_grad=None, gauss_curvature=None,
                 domain=None, normal_radius=np.inf, name="custom"):
        self._metric = metric
        self._metric_grad = metric_grad
        self._K = gauss_curvature
        self.domain = domain if domain is not None else Plane()
        self.normal_radius = float(normal_radius)
        self.name = name

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    # --- metric data -------------------------------------------------------
    def metric(self, x):
        return self._metric(as_points(x))

    def metric_grad(self, x):
        return self._metric_grad(as_points(x))

    def gauss_curvature(self, x):
        return self._K(as_points(x))

    # --- domain ------------------------------------------------------------
    def domain_margin(self, x):
        return self.domain.margin(as_points(x))

    def contains(self, x):
        return self.domain_margin(x) > 0

    def check_point(self, x):
        if not np.all(self.contains(x)):
            raise DomainError(f"point(s) outside the domain of {self!r}: {np.asarray(x).tolist()}")

    # --- derived quantities --------------------------------------------------
    @property
    def closed_form(self):
        return self.model is not None

    def inner(self, x, a, b):
        return np.einsum("...i,...ij,...j->...", a, self.metric(x), b)

    def norm(self, x, a):
        return np.sqrt(self.inner(x, a, a))

    def normalize(self, x, a):
        return a / self.norm(x, a)[..., None]

    def rotate(self, x, w):
        """Rotate ``w`` by +90 degrees in the metric (chart orientation)."""
        g = self.metric(x)
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
        wl = np.einsum("...ij,...j->...i", g, w)
        return np.stack([-wl[..., 1], wl[..., 0]], axis=-1) / np.sqrt(det)[..., None]

    def sqrt_det(self, x):
        g = self.metric(x)
        return np.sqrt(g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2)

    def christoffel(self, x):
        """Levi-Civita symbols ``G[..., k, i, j]`` (Gamma^k_ij)."""
        g = self.metric(x)
        dg = self.metric_grad(x)
        ginv = np.linalg.inv(g)
        # first kind: G_lij = (d_i g_lj + d_j g_li - d_l g_ij) / 2
        first = 0.5 * (np.einsum("...ilj->...lij", dg) + np.einsum("...jli->...lij", dg) - dg)
        return np.einsum("...kl,...lij->...kij", ginv, first)

    def geodesic_acceleration(self, x, v):
        return -np.einsum("...kij,...i,...j->...k", self.christoffel(x), v, v)

    def orthonormal_frame(self, x):
        e1 = self.normalize(x, np.broadcast_to([1.0, 0.0], np.shape(x)).copy())
        return e1, self.rotate(x, e1)

    def to_spec(self):
        raise NotImplementedError("custom charts cannot be serialized")


class EuclideanChart(SurfaceChart):
    kind = "euclidean"
    model = FLAT

    def __init__(self):
        super().__init__(domain=Plane(), normal_radius=np.inf, name="euclidean")

    def metric(self, x):
        x = as_points(x)
        return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()

    def metric_grad(self, x):
        return np.zeros(as_points(x).shape[:-1] + (2, 2, 2))

    def gauss_curvature(self, x):
        return np.zeros(as_points(x).shape[:-1])

    def christoffel(self, x):
        return self.metric_grad(x)

    def geodesic_acceleration(self, x, v):
        return np.zeros_like(v)

    def to_hom(self, x):
        x = as_points(x)
        return np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)

    def from_hom(self, X):
        return X[..., :2] / X[..., 2:3]

    def hom_jacobian(self, x):
        x = as_points(x)
        J = np.zeros(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = J[..., 1, 1] = 1.0
        return J

    def to_spec(self):
        return {"kind": "euclidean"}


class ConformalChart(SurfaceChart):
    """Metric ``exp(2 lam) (du^2 + dv^2)``; subclasses supply ``lam``."""

    def conformal(self, x):
        """Return ``(lam, grad lam, laplacian lam)``."""
        raise NotImplementedError

    def metric(self, x):
        lam = self.conformal(as_points(x))[0]
        return np.exp(2 * lam)[..., None, None] * np.eye(2)

    def metric_grad(self, x):
        lam, grad, _ = self.conformal(as_points(x))
        e = 2 * np.exp(2 * lam)[..., None] * grad
        return e[..., :, None, None] * np.eye(2)

    def gauss_curvature(self, x):
        lam, _, lap = self.conformal(as_points(x))
        return -np.exp(-2 * lam) * lap

    def geodesic_acceleration(self, x, v):
        # a = -2 <grad lam, v> v + |v|^2 grad lam  (Euclidean products)
        _, gl, _ = self.conformal(x)
        gv = np.sum(gl * v, axis=-1)[..., None]
        vv = np.sum(v * v, axis=-1)[..., None]
        return -2 * gv * v + vv * gl

    def rotate(self, x, w):
        return np.stack([-w[..., 1], w[..., 0]], axis=-1)

    def sqrt_det(self, x):
        return np.exp(2 * self.conformal(as_points(x))[0])


class StereographicSphereChart(ConformalChart):
    """Unit sphere seen through stereographic projection from the south pole.

    The chart origin is the north pole; colatitude ``u`` maps to chart radius
    ``tan(u/2)``.  The domain is the cap ``u < pi/2 - margin``.
    """

    kind = "sphere_cap"
    model = SPHERE
    projection = "stereographic"

    def __init__(self, margin=0.05):
        self.margin = float(margin)
        cap = np.pi / 2 - self.margin
        super().__init__(domain=Disc(np.tan(cap / 2)), normal_radius=2 * cap,
                         name="sphere_cap/stereographic")

    def conformal(self, x):
        r2 = np.sum(x * x, axis=-1)
        lam = np.log(2.0) - np.log1p(r2)
        grad = -2 * x / (1 + r2)[..., None]
        lap = -4 / (1 + r2) ** 2
        return lam, grad, lap

    def gauss_curvature(self, x):
        return np.ones(as_points(x).shape[:-1])

    def to_hom(self, x):
        x = as_points(x)
        r2 = np.sum(x * x, axis=-1)[..., None]
        return np.concatenate([2 * x, 1 - r2], axis=-1) / (1 + r2)

    def from_hom(self, X):
        return X[..., :2] / (1 + X[..., 2:3])

    def hom_jacobian(self, x):
        x = as_points(x)
        u, v = x[..., 0], x[..., 1]
        d = 1 + u * u + v * v
        J = np.empty(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = 2 / d - 4 * u * u / d**2
        J[..., 0, 1] = J[..., 1, 0] = -4 * u * v / d**2
        J[..., 1, 1] = 2 / d - 4 * v * v / d**2
        J[..., 2, 0] = -4 * u / d**2
        J[..., 2, 1] = -4 * v / d**2
        return J

    def to_spec(self):
        return {"kind": "sphere_cap", "projection": "stereographic", "margin": self.margin}


class SpherePolarChart(SurfaceChart):
    """Unit sphere in (colatitude, longitude): ``g = diag(1, sin(u)^2)``."""

    kind = "sphere_cap"
    model = SPHERE
    projection = "polar"

    def __init__(self, margin=0.05):
        self.margin = float(margin)
        cap = np.pi / 2 - self.margin
        super().__init__(domain=Rect([0.0, -np.pi], [cap, np.pi]), normal_radius=2 * cap,
                         name="sphere_cap/polar")

    def metric(self, x):
        x = as_points(x)
        g = np.zeros(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = np.sin(x[..., 0]) ** 2
        return g

    def metric_grad(self, x):
        x = as_points(x)
        dg = np.zeros(x.shape[:-1] + (2, 2, 2))
        dg[..., 0, 1, 1] = np.sin(2 * x[..., 0])
        return dg

    def gauss_curvature(self, x):
        return np.ones(as_points(x).shape[:-1])

    def to_hom(self, x):
        x = as_points(x)
        u, v = x[..., 0], x[..., 1]
        return np.stack([np.sin(u) * np.cos(v), np.sin(u) * np.sin(v), np.cos(u)], axis=-1)

    def from_hom(self, X):
        return np.stack([np.arctan2(np.hypot(X[..., 0], X[..., 1]), X[..., 2]),
                         np.arctan2(X[..., 1], X[..., 0])], axis=-1)

    def hom_jacobian(self, x):
        x = as_points(x)
        u, v = x[..., 0], x[..., 1]
        J = np.zeros(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = np.cos(u) * np.cos(v)
        J[..., 0, 1] = -np.sin(u) * np.sin(v)
        J[..., 1, 0] = np.cos(u) * np.sin(v)
        J[..., 1, 1] = np.sin(u) * np.cos(v)
        J[..., 2, 0] = -np.sin(u)
        return J

    def to_spec(self):
        return {"kind": "sphere_cap", "projection": "polar", "margin": self.margin}


class PoincareDiscChart(ConformalChart):
    """Hyperbolic plane in the Poincare disc, ``g = 4/(1 - r^2)^2 I``."""

    kind = "poincare"
    model = HYPERBOLIC

    def __init__(self, margin=1e-3):
        self.margin = float(margin)
        rmax = 1 - self.margin
        super().__init__(domain=Disc(rmax), normal_radius=4 * np.arctanh(rmax), name="poincare")

    def conformal(self, x):
        r2 = np.sum(x * x, axis=-1)
        lam = np.log(2.0) - np.log1p(-r2)
        grad = 2 * x / (1 - r2)[..., None]
        lap = 4 / (1 - r2) ** 2
        return lam, grad, lap

    def gauss_curvature(self, x):
        return -np.ones(as_points(x).shape[:-1])

    def to_hom(self, x):
        x = as_points(x)
        r2 = np.sum(x * x, axis=-1)[..., None]
        return np.concatenate([2 * x, 1 + r2], axis=-1) / (1 - r2)

    def from_hom(self, X):
        return X[..., :2] / (1 + X[..., 2:3])

    def hom_jacobian(self, x):
        x = as_points(x)
        u, v = x[..., 0], x[..., 1]
        d = 1 - u * u - v * v
        J = np.empty(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = 2 / d + 4 * u * u / d**2
        J[..., 0, 1] = J[..., 1, 0] = 4 * u * v / d**2
        J[..., 1, 1] = 2 / d + 4 * v * v / d**2
        J[..., 2, 0] = 4 * u / d**2
        J[..., 2, 1] = 4 * v / d**2
        return J

    def to_spec(self):
        return {"kind": "poincare", "margin": self.margin}


class ConformalPolyChart(ConformalChart):
    """Metric ``exp(2 lam)(du^2 + dv^2)`` with ``lam`` a bivariate polynomial.

    Parameters
    ----------
    coeffs : sequence of (i, j, c)
        Terms ``c u^i v^j`` of ``lam``.
    domain : Disc or Rect
    normal_radius : float
    """

    kind = "conformal_poly"

    def __init__(self, coeffs, domain=None, normal_radius=1.0):
        terms = [(int(i), int(j), float(c)) for i, j, c in coeffs]
        n = 1 + max([max(i, j) for i, j, _ in terms], default=0)
        C = np.zeros((n + 2, n + 2))
        for i, j, c in terms:
            C[i, j] += c
        self.terms = terms
        self._C = C
        self._Cu = np.polynomial.polynomial.polyder(C, axis=0)
        self._Cv = np.polynomial.polynomial.polyder(C, axis=1)
        self._Cuu = np.polynomial.polynomial.polyder(C, 2, axis=0)
        self._Cvv = np.polynomial.polynomial.polyder(C, 2, axis=1)
        super().__init__(domain=domain if domain is not None else Disc(1.0),
                         normal_radius=normal_radius, name="conformal_poly")

    def conformal(self, x):
        P = np.polynomial.polynomial.polyval2d
        u, v = x[..., 0], x[..., 1]
        lam = P(u, v, self._C)
        grad = np.stack([P(u, v, self._Cu), P(u, v, self._Cv)], axis=-1)
        lap = P(u, v, self._Cuu) + P(u, v, self._Cvv)
        return lam, grad, lap

    def to_spec(self):
        return {"kind": "conformal_poly", "coeffs": [list(t) for t in self.terms],
                "domain": self.domain.to_spec(), "normal_radius": self.normal_radius}


def push_forward(chart, x, w):
    """Ambient image of the chart vector ``w`` at ``x`` (closed-form charts)."""
    return np.einsum("...ij,...j->...i", chart.hom_jacobian(x), w)


def pull_back(chart, x, V):
    """Chart components of an ambient tangent vector ``V`` at ``x``."""
    J = chart.hom_jacobian(x)
    # normal equations with the Euclidean product; exact for tangent V
    JtJ = np.einsum("...ki,...kj->...ij", J, J)
    return np.linalg.solve(JtJ, np.einsum("...ki,...k->...i", J, V)[..., None])[..., 0]


def brioschi_curvature(chart, x, h=1e-4):
    """Gaussian curvature from the metric alone (Brioschi formula, FD partials)."""
    x = as_points(x)
    e = np.eye(2) * h

    def EFG(p):
        g = chart.metric(p)
        return g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]

    E, F, G = EFG(x)
    dE, dF, dG = chart.metric_grad(x)[..., :, 0, 0], chart.metric_grad(x)[..., :, 0, 1], chart.metric_grad(x)[..., :, 1, 1]
    Eu, Ev = dE[..., 0], dE[..., 1]
    Fu, Fv = dF[..., 0], dF[..., 1]
    Gu, Gv = dG[..., 0], dG[..., 1]
    Ep, Fp, Gp = EFG(x + e[0])
    Em, Fm, Gm = EFG(x - e[0])
    Guu = (Gp - 2 * G + Gm) / h**2
    Ep2, _, _ = EFG(x + e[1])
    Em2, _, _ = EFG(x - e[1])
    Evv = (Ep2 - 2 * E + Em2) / h**2
    Fuv = (EFG(x + e[0] + e[1])[1] - EFG(x + e[0] - e[1])[1]
           - EFG(x - e[0] + e[1])[1] + EFG(x - e[0] - e[1])[1]) / (4 * h**2)
    A = np.stack([
        np.stack([-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev], -1),
        np.stack([Fv - 0.5 * Gu, E, F], -1),
        np.stack([0.5 * Gv, F, G], -1)], -2)
    B = np.stack([
        np.stack([np.zeros_like(E), 0.5 * Ev, 0.5 * Gu], -1),
        np.stack([0.5 * Ev, E, F], -1),
        np.stack([0.5 * Gu, F, G], -1)], -2)
    return (np.linalg.det(A) - np.linalg.det(B)) / (E * G - F * F) ** 2


def validate_chart(chart, n=64, seed=0, h=1e-6):
    """Check the chart invariants on ``n`` sampled domain points.

    Returns
    -------
    dict
        ``min_eig`` (smallest metric eigenvalue), ``grad_rel_err`` (supplied
        vs. central-difference metric partials), ``curvature_err`` (supplied
        K vs. Brioschi).
    """
    rng = np.random.default_rng(seed)
    x = chart.domain.sample(n, rng)
    g = chart.metric(x)
    min_eig = float(np.min(np.linalg.eigvalsh(g)))
    dg = chart.metric_grad(x)
    fd = np.stack([(chart.metric(x + h * e) - chart.metric(x - h * e)) / (2 * h)
                   for e in np.eye(2)], axis=-3)
    scale = np.maximum(np.abs(dg), np.abs(g)[..., None, :, :])
    grad_err = float(np.max(np.abs(fd - dg) / np.maximum(scale, 1e-300)))
    k_err = float(np.max(np.abs(brioschi_curvature(chart, x) - chart.gauss_curvature(x))))
    return {"min_eig": min_eig, "grad_rel_err": grad_err, "curvature_err": k_err}
