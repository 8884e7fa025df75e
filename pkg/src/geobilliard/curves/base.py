"""Closed boundary curves in a chart: pieces, arclength tables, curvature.

A curve is a cyclic list of pieces, each a map ``u in [0, 1] -> chart``
with analytic derivatives.  The global parameter ``t in [0, 1)`` is split
evenly among pieces.  Arclength is tabulated per piece by a Chebyshev
interpolant of the metric speed, which integrates and inverts to machine
precision.
"""
import numpy as np
from numpy.polynomial import Chebyshev

from ..exceptions import ConstructionError, RegularityError
from ..geometry.charts import push_forward
from ..geometry.geodesics import log_map


class CurvePiece:
    """Base class: subclasses implement ``eval(u, order)``.

    ``eval`` returns an array of shape ``(order + 1, n, 2)`` holding the
    position and its first ``order`` derivatives with respect to ``u``.
    """

    def eval(self, u, order=2):
        raise NotImplementedError

    def to_spec(self):
        return None


class FourierPiece(CurvePiece):
    """Closed trigonometric curve ``x(u) = sum_k a_k cos(2 pi k u) + b_k sin(2 pi k u)``.

    Parameters
    ----------
    cos_coeffs, sin_coeffs : array_like, shape (K + 1, 2)
        Coefficients of ``cos(2 pi k u)`` and ``sin(2 pi k u)`` for both chart
        coordinates; row 0 of ``cos_coeffs`` is the center.
    """

    def __init__(self, cos_coeffs, sin_coeffs):
        self.a = np.asarray(cos_coeffs, dtype=float)
        self.b = np.asarray(sin_coeffs, dtype=float)
        self.k = 2 * np.pi * np.arange(self.a.shape[0])

    def eval(self, u, order=2):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        ph = np.outer(u, self.k)
        c, s = np.cos(ph), np.sin(ph)
        out = np.empty((order + 1, u.size, 2))
        kp = np.ones_like(self.k)
        for d in range(order + 1):
            # d-th derivative cycles cos -> -sin -> -cos -> sin
            m = d % 4
            ca = {0: c, 1: -s, 2: -c, 3: s}[m]
            sa = {0: s, 1: c, 2: -s, 3: -c}[m]
            out[d] = (ca * kp) @ self.a + (sa * kp) @ self.b
            kp = kp * self.k
        return out

    def to_spec(self):
        return {"cos": self.a.tolist(), "sin": self.b.tolist()}


class ArcPiece(CurvePiece):
    """Chart-space circular arc ``c + R (cos a, sin a)``, ``a`` from ``a0`` to ``a1``."""

    def __init__(self, center, radius, a0, a1):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.a0, self.a1 = float(a0), float(a1)

    def eval(self, u, order=2):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        da = self.a1 - self.a0
        a = self.a0 + u * da
        out = np.empty((order + 1, u.size, 2))
        out[0] = self.center + self.radius * np.c_[np.cos(a), np.sin(a)]
        for d in range(1, order + 1):
            ph = a + d * np.pi / 2
            out[d] = self.radius * da**d * np.c_[np.cos(ph), np.sin(ph)]
        return out


class FunctionPiece(CurvePiece):
    """Piece defined by a callable ``f(u, order) -> (order + 1, n, 2)``."""

    def __init__(self, fn, spec=None):
        self.fn = fn
        self.spec = spec

    def eval(self, u, order=2):
        return self.fn(np.atleast_1d(np.asarray(u, dtype=float)), order)

    def to_spec(self):
        return self.spec


def _cheb_speed(speed, tol=1e-14):
    for deg in (16, 32, 64, 128, 256, 512, 1024, 2048):
        c = Chebyshev.interpolate(speed, deg, domain=[0.0, 1.0])
        tail = np.max(np.abs(c.coef[-4:]))
        if tail < tol * np.max(np.abs(c.coef)):
            return c.trim(tol * 1e-2 * np.max(np.abs(c.coef)))
    return c


class BoundaryCurve:
    """Closed, positively oriented boundary curve in a chart.

    Parameters
    ----------
    chart : SurfaceChart
    pieces : list of CurvePiece
        Consecutive pieces; piece ``i`` covers ``t in [i/n, (i+1)/n]``.
    breakpoints : sequence of int, optional
        Indices ``i`` of joins (start of piece ``i``) that are only C^1.
        Joins not listed are treated as C^2.
    name : str
    spec : dict, optional
        Serializable description used by the configuration layer.
    validate : bool
        Check closure, regularity, simplicity and orientation.
    """

    def __init__(self, chart, pieces, breakpoints=(), name="curve", spec=None, validate=True):
        self.chart = chart
        self.pieces = list(pieces)
        self.n_pieces = len(self.pieces)
        self.name = name
        self.spec = spec
        self._break_idx = sorted(int(i) % self.n_pieces for i in breakpoints)
        self._build_arclength()
        if validate:
            self._validate()

    # --- arclength -----------------------------------------------------------
    def _piece_speed(self, i):
        piece = self.pieces[i]

        def speed(u):
            d = piece.eval(u, 1)
            return self.chart.norm(d[0], d[1])
        return speed

    def _build_arclength(self):
        self._speed, self._integral, lengths = [], [], []
        for i in range(self.n_pieces):
            sp = self._piece_speed(i)
            uu = np.linspace(0, 1, 257)
            if np.min(sp(uu)) <= 1e-12:
                raise RegularityError(f"piece {i} has vanishing speed")
            c = _cheb_speed(sp)
            S = c.integ(lbnd=0.0)
            self._speed.append(c)
            self._integral.append(S)
            lengths.append(float(S(1.0)))
        self.piece_lengths = np.array(lengths)
        self.offsets = np.r_[0.0, np.cumsum(self.piece_lengths)]
        self.length = float(self.offsets[-1])

    @property
    def L(self):
        return self.length

    @property
    def breakpoints(self):
        """Arclength positions of the C^1-only joins."""
        return np.array([self.offsets[i] for i in self._break_idx])

    @property
    def breakpoint_t(self):
        return np.array([i / self.n_pieces for i in self._break_idx])

    def _split_t(self, t):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        x = t * self.n_pieces
        i = np.minimum(np.floor(x).astype(int), self.n_pieces - 1)
        return i, x - i

    def s_of_t(self, t):
        """Arclength at parameter ``t`` (reduced to ``[0, L)``)."""
        i, u = self._split_t(t)
        out = np.empty(np.shape(u))
        for k in range(self.n_pieces):
            m = i == k
            if np.any(m):
                out[m] = self.offsets[k] + self._integral[k](u[m])
        return out if out.ndim else float(out)

    def t_of_s(self, s):
        """Parameter ``t in [0, 1)`` at arclength ``s`` (any real, reduced mod L)."""
        s = np.mod(np.asarray(s, dtype=float), self.length)
        i = np.clip(np.searchsorted(self.offsets, s, side="right") - 1, 0, self.n_pieces - 1)
        out = np.empty(np.shape(s))
        for k in range(self.n_pieces):
            m = i == k
            if not np.any(m):
                continue
            target = s[m] - self.offsets[k]
            u = target / self.piece_lengths[k]
            S, sp = self._integral[k], self._speed[k]
            for _ in range(30):
                du = (S(u) - target) / sp(u)
                u = np.clip(u - du, 0.0, 1.0)
                if np.max(np.abs(du)) < 1e-16:
                    break
            out[m] = (k + u) / self.n_pieces
        return out if out.ndim else float(out)

    # --- evaluation ----------------------------------------------------------
    def eval_t(self, t, order=2):
        """Chart position and ``t``-derivatives, shape ``(order + 1, n, 2)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i, u = self._split_t(t)
        out = np.empty((order + 1, t.size, 2))
        for k in range(self.n_pieces):
            m = i == k
            if np.any(m):
                d = self.pieces[k].eval(u[m], order)
                scale = float(self.n_pieces) ** np.arange(order + 1)
                out[:, m] = d * scale[:, None, None]
        return out

    def point(self, s):
        return self.eval_t(self.t_of_s(np.atleast_1d(s)), 0)[0]

    def derivs(self, s, order=2):
        """Chart position and derivatives w.r.t. arclength at ``s``."""
        t = self.t_of_s(np.atleast_1d(s))
        d = self.eval_t(t, order)
        x, xt = d[0], d[1]
        sig = self.chart.norm(x, xt)[:, None]
        out = [x, xt / sig]
        if order >= 2:
            sig_t = self.chart.inner(x, xt, d[2])[:, None] / sig
            # include the metric variation: d|x'|/dt has a d_k g term
            dg = self.chart.metric_grad(x)
            sig_t = sig_t + 0.5 * np.einsum("nk,nkij,ni,nj->n", xt, dg, xt, xt)[:, None] / sig
            out.append((d[2] - sig_t / sig * xt) / sig**2)
        return np.stack(out)

    def frame(self, s):
        """Position, unit tangent and inward unit normal at ``s`` (chart components)."""
        t = self.t_of_s(np.atleast_1d(s))
        d = self.eval_t(t, 1)
        T = self.chart.normalize(d[0], d[1])
        return d[0], T, self.chart.rotate(d[0], T)

    def frame_t(self, t):
        d = self.eval_t(t, 1)
        T = self.chart.normalize(d[0], d[1])
        return d[0], T, self.chart.rotate(d[0], T)

    def curvature_t(self, t):
        """Covariant geodesic curvature at parameter ``t`` (right limit at joins)."""
        return self._curv_from_derivs(self.eval_t(t, 2))

    def curvature(self, s):
        """Covariant geodesic curvature at arclength ``s`` (right limit at joins)."""
        return self.curvature_t(self.t_of_s(np.atleast_1d(s)))

    def lateral_curvature(self, s):
        """Left and right curvature limits ``(kappa_minus, kappa_plus)`` at ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = self.t_of_s(s)
        i, u = self._split_t(t)
        right = self.curvature_t(t)
        left = right.copy()
        scale = (float(self.n_pieces) ** np.arange(3))[:, None, None]
        for k in np.flatnonzero(u < 1e-13):
            j = (i[k] - 1) % self.n_pieces
            left[k] = self._curv_from_derivs(self.pieces[j].eval(np.array([1.0]), 2) * scale)[0]
        return left, right

    def _curv_from_derivs(self, d):
        x, xd, xdd = d
        G = self.chart.christoffel(x)
        a = xdd + np.einsum("nkij,ni,nj->nk", G, xd, xd)
        sig = self.chart.norm(x, xd)
        cross = xd[:, 0] * a[:, 1] - xd[:, 1] * a[:, 0]
        return self.chart.sqrt_det(x) * cross / sig**3

    def is_breakpoint(self, s, tol=1e-12):
        if not self._break_idx:
            return False
        d = np.abs(np.mod(s - self.breakpoints + 0.5 * self.length, self.length) - 0.5 * self.length)
        return bool(np.min(d) < tol * self.length)

    def covariant_acceleration(self, s):
        """``D gamma'/ds`` in chart components at arclength ``s``."""
        d = self.derivs(s, 2)
        G = self.chart.christoffel(d[0])
        return d[2] + np.einsum("nkij,ni,nj->nk", G, d[1], d[1])

    # --- sampling, geometry checks -------------------------------------------
    def sample(self, n):
        """Chart points at ``n`` equally spaced arclengths."""
        return self.point(np.arange(n) * self.length / n)

    def polygon(self, n=4096):
        return self.sample(n)

    def signed_area(self, n=2048):
        P = self.sample(n)
        Q = np.roll(P, -1, axis=0)
        return 0.5 * float(np.sum(P[:, 0] * Q[:, 1] - P[:, 1] * Q[:, 0]))

    def is_simple(self, n=600):
        P = self.sample(n)
        A, B = P, np.roll(P, -1, axis=0)

        def orient(p, q, r):
            return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])
        o1 = orient(A[:, None], B[:, None], A[None])
        o2 = orient(A[:, None], B[:, None], B[None])
        o3 = orient(A[None], B[None], A[:, None])
        o4 = orient(A[None], B[None], B[:, None])
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        idx = np.arange(n)
        adj = (np.abs(idx[:, None] - idx[None]) <= 1) | (np.abs(idx[:, None] - idx[None]) == n - 1)
        return not np.any(hit & ~adj)

    def _validate(self):
        for k in range(self.n_pieces):
            a = self.pieces[k].eval(np.array([1.0]), 1) * np.array([1.0, self.n_pieces])[:, None, None]
            b = self.pieces[(k + 1) % self.n_pieces].eval(np.array([0.0]), 1) * np.array([1.0, self.n_pieces])[:, None, None]
            gap = np.linalg.norm(a[0] - b[0])
            if gap > 1e-9:
                raise ConstructionError(f"pieces {k} and {k + 1} do not meet (gap {gap:.3e})")
            ta = a[1, 0] / np.linalg.norm(a[1, 0])
            tb = b[1, 0] / np.linalg.norm(b[1, 0])
            if np.linalg.norm(ta - tb) > 1e-7:
                raise ConstructionError(f"tangent jump at join {k + 1}: curve is not C^1")
        P = self.sample(256)
        if not np.all(self.chart.contains(P)):
            raise ConstructionError("curve leaves the chart domain")
        if self.signed_area() <= 0:
            raise ConstructionError("curve is not positively oriented")
        if not self.is_simple():
            raise ConstructionError("curve is not simple")

    # --- ambient helpers (closed-form charts) --------------------------------
    def hom_frame_t(self, t):
        """Homogeneous point, unit tangent and inward normal (closed-form charts)."""
        x, T, N = self.frame_t(t)
        ch = self.chart
        return ch.to_hom(x), push_forward(ch, x, T), push_forward(ch, x, N)

    def to_spec(self):
        return {"surface": self.chart.to_spec(), "curve": self.spec}

    def __repr__(self):
        return f"BoundaryCurve({self.name!r}, L={self.length:.6g}, pieces={self.n_pieces})"


def reparametrize_arclength(curve):
    """Return the same curve parametrized proportionally to arclength.

    Each piece is composed with its inverse arclength map; the new
    parameter ``t`` equals ``s / L``.
    """
    pieces = [_ArclengthPiece(curve, k) for k in range(curve.n_pieces)]
    return BoundaryCurve(curve.chart, pieces, breakpoints=curve._break_idx, name=curve.name,
                         spec=curve.spec, validate=False)


class _ArclengthPiece(CurvePiece):
    def __init__(self, curve, k):
        self.curve, self.k = curve, k
        self.S, self.sig = curve._integral[k], curve._speed[k]
        self.dsig = self.sig.deriv()
        self.Lk = curve.piece_lengths[k]

    def _u_of_frac(self, f):
        target = f * self.Lk
        u = f.copy()
        for _ in range(30):
            du = (self.S(u) - target) / self.sig(u)
            u = np.clip(u - du, 0.0, 1.0)
            if np.max(np.abs(du)) < 1e-16:
                break
        return u

    def eval(self, f, order=2):
        u = self._u_of_frac(f)
        d = self.curve.pieces[self.k].eval(u, order)
        sig = self.sig(u)[:, None]
        up = self.Lk / sig                 # du/df
        out = np.empty_like(d)
        out[0] = d[0]
        if order >= 1:
            out[1] = d[1] * up
        if order >= 2:
            upp = -self.Lk * self.dsig(u)[:, None] * up / sig**2
            out[2] = d[2] * up**2 + d[1] * upp
        return out


def normal_chart_curvature(curve, s, h=None, levels=7):
    """Curvature from the flat curvature of the curve in normal coordinates.

    The nearby points ``gamma(s + k h)``, ``k = -2..2``, are mapped by
    ``log`` at ``gamma(s)`` into the orthonormal frame ``(T, N)`` and the
    planar curvature is taken with five-point differences.  The step is
    halved ``levels - 1`` times and the estimates are Richardson-extrapolated;
    the tableau entry with the smallest change is returned, which keeps
    narrow curvature features resolved above the round-off floor.
    """
    s = float(s)
    L = curve.length
    if h is None:
        h = 2e-4 * L
    if curve._break_idx:
        bp = curve.breakpoints
        dist = np.min(np.abs(np.mod(s - bp + 0.5 * L, L) - 0.5 * L))
        if dist < 1e-12 * L:
            raise ValueError("normal-chart curvature is undefined at a breakpoint")
        h = min(h, 0.45 * dist)
    x0, T, N = curve.frame(s)
    x0, T, N = x0[0], T[0], N[0]
    hs = h * 0.5 ** np.arange(max(int(levels), 1))
    ks = np.array([-2, -1, 1, 2])
    pts = curve.point(s + np.outer(hs, ks).ravel())
    W = log_map(curve.chart, np.broadcast_to(x0, pts.shape), pts)
    g = curve.chart.metric(x0)
    zero = np.zeros((hs.size, 1))
    # columns ordered k = -2, -1, 0, 1, 2
    xi = np.hstack([zero, (W @ g @ T).reshape(hs.size, 4)])[:, [1, 2, 0, 3, 4]]
    eta = np.hstack([zero, (W @ g @ N).reshape(hs.size, 4)])[:, [1, 2, 0, 3, 4]]
    c1 = np.array([1, -8, 0, 8, -1]) / 12
    c2 = np.array([-1, 16, -30, 16, -1]) / 12
    xp, yp = xi @ c1 / hs, eta @ c1 / hs
    xpp, ypp = xi @ c2 / hs**2, eta @ c2 / hs**2
    k = (xp * ypp - yp * xpp) / (xp * xp + yp * yp) ** 1.5
    rows = [[k[0]]]
    best, err = k[0], np.inf
    for i in range(1, hs.size):
        rows.append([k[i]])
        for j in range(1, i + 1):
            f = 4.0 ** (j + 1)      # the five-point error is even in h and starts at h^4
            rows[i].append(rows[i][j - 1] + (rows[i][j - 1] - rows[i - 1][j - 1]) / (f - 1))
            e = max(abs(rows[i][j] - rows[i][j - 1]), abs(rows[i][j] - rows[i - 1][j - 1]))
            if e < err:
                best, err = rows[i][j], e
    return float(best)


def geodesic_curvature(curve, s, route="covariant"):
    """Geodesic curvature at arclength ``s``.

    Returns the lateral pair ``(kappa_minus, kappa_plus)`` when ``s`` is a
    declared breakpoint.  ``route="normal"`` uses normal coordinates.
    """
    if curve.is_breakpoint(s):
        km, kp = curve.lateral_curvature(s)
        return float(km[0]), float(kp[0])
    if route == "normal":
        return normal_chart_curvature(curve, s)
    return float(curve.curvature(s)[0])
