"""Angle jump across a curvature discontinuity.

At a breakpoint ``p = gamma(s*)`` with lateral curvatures ``k_minus > k_plus``,
take the geodesic ``beta`` leaving ``p`` along the inner normal and, at
height ``y``, the geodesic ``eta`` through ``beta(y)`` orthogonal to
``beta``.  ``eta`` meets the boundary before ``p`` at angle ``a_minus`` and
after ``p`` at angle ``a_plus``; as ``y -> 0`` the ratio ``a_plus / a_minus``
tends to ``sqrt(k_plus / k_minus)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..exceptions import GeometryError, PreconditionError
from ..geometry.charts import push_forward
from ..geometry.geodesics import integrate_geodesic
from ..reports import CertificateReport, witness


@dataclass
class JumpRatioResult:
    s_star: float
    kappa_minus: float
    kappa_plus: float
    a_minus: np.ndarray
    a_plus: np.ndarray
    height: np.ndarray
    ratio: np.ndarray
    limit: float
    chord_identity_defect: np.ndarray

    @property
    def expected(self):
        return float(np.sqrt(self.kappa_plus / self.kappa_minus))

    @property
    def rel_error(self):
        return abs(self.limit / self.expected - 1)

    def rows(self):
        return [{"a_minus": float(a), "a_plus": float(b), "y": float(y), "ratio": float(r)}
                for a, b, y, r in zip(self.a_minus, self.a_plus, self.height, self.ratio)]


class _ClosedProbe:
    """Hits of ``eta`` computed in the ambient model."""

    def __init__(self, table, s_star):
        self.table, self.ch, self.s = table, table.chart, float(s_star)
        self.m = self.ch.model
        x, T, N = (a[0] for a in table.curve.frame(np.array([s_star])))
        self.P = self.ch.to_hom(x)
        self.Tv = push_forward(self.ch, x, T)
        self.Nv = push_forward(self.ch, x, N)

    def _side(self, s, B, n):
        X = self.ch.to_hom(self.table.curve.point(s))
        return np.sum(X * n, axis=-1) - float(np.sum(B * n))

    def _hit(self, B, n, sign):
        L = self.table.L
        off = np.geomspace(1e-10 * L, 0.45 * L, 600)
        f = self._side(self.s + sign * off, B, n)
        f0 = self._side(np.array([self.s]), B, n)[0]
        k = np.flatnonzero(np.sign(f) != np.sign(f0))
        if k.size == 0:
            raise GeometryError("orthogonal geodesic does not cross the boundary")
        k = k[0]
        lo = 0.0 if k == 0 else off[k - 1]
        g = lambda d: self._side(np.array([self.s + sign * d]), B, n)[0]  # noqa: E731
        d = brentq(g, lo, off[k], xtol=1e-15 * L, rtol=1e-15, maxiter=200)
        return self.s + sign * d

    def angles(self, y):
        m, ch, curve = self.m, self.ch, self.table.curve
        B = m.exp(self.P, self.Nv, y)
        # parallel transport along beta keeps T (constant in every ambient model)
        n = np.cross(B, self.Tv)
        out = []
        for sign in (-1.0, 1.0):
            s_hit = self._hit(B, n, sign)
            x, T, N = (a[0] for a in curve.frame(np.array([s_hit])))
            X = ch.to_hom(x)
            w = m.log_dir(X, B)
            Tv, Nv = push_forward(ch, x, T), push_forward(ch, x, N)
            out.append(float(np.arctan2(abs(m.inner(w, Nv)), abs(m.inner(w, Tv)))))
        return out[0], out[1]


class _OdeProbe:
    """Hits of ``eta`` by geodesic integration with boundary-crossing events."""

    def __init__(self, table, s_star):
        self.table, self.ch = table, table.chart
        self.x, self.T, self.N = (a[0] for a in table.curve.frame(np.array([s_star])))

    def angles(self, y):
        ch, curve = self.ch, self.table.curve
        tr = integrate_geodesic(ch, self.x, self.N, y)
        st = tr.states[-1]
        b, bd = st[:2], st[2:4]
        D = -ch.rotate(b, bd)  # transported tangent: -J beta' equals +T at y = 0
        out = []
        for sign in (-1.0, 1.0):
            hit = self.table.shoot(b, sign * D)
            t = hit["t"]
            x, T, N = (a[0] for a in curve.frame_t(np.array([t])))
            u = hit["velocity"]
            out.append(float(np.arctan2(abs(ch.inner(x, u, N)), abs(ch.inner(x, u, T)))))
        return out[0], out[1]


def descending_jumps(curve, rel=1e-9):
    """Breakpoints where the curvature drops (``kappa_minus > kappa_plus``)."""
    bps = curve.breakpoints
    if bps.size == 0:
        return bps
    km, kp = curve.lateral_curvature(bps)
    return bps[km > kp * (1 + rel)]


def hubacher_jump_ratio(table, s_star, a_minus_list=(0.08, 0.04, 0.02, 0.01)):
    """Measure ``a_plus / a_minus`` at a curvature jump and extrapolate ``a_minus -> 0``.

    For each target ``a_minus`` the height ``y`` along the normal geodesic is
    root-solved; the limit assumes ``ratio = r0 + c a_minus^2`` and uses the
    two smallest angles.

    Raises
    ------
    PreconditionError
        Unless ``kappa_minus >= kappa_plus > 0`` at ``s_star``.
    GeometryError
        If a root solve fails.
    """
    from .certificates import as_table
    table = as_table(table)
    km, kp = (float(v[0]) for v in table.curve.lateral_curvature(np.array([float(s_star)])))
    if not (kp > 0 and km >= kp * (1 - 1e-9)):
        raise PreconditionError(f"need kappa_minus >= kappa_plus > 0 (got {km:.6g}, {kp:.6g})")
    probe = _ClosedProbe(table, s_star) if table.chart.closed_form else _OdeProbe(table, s_star)
    targets = np.sort(np.asarray(a_minus_list, dtype=float))[::-1]
    am, ap, ys = [], [], []
    for a in targets:
        y0 = a**2 / (2 * km)
        f = lambda y: probe.angles(y)[0] - a  # noqa: E731
        lo, hi = 0.25 * y0, 4 * y0
        try:
            for _ in range(20):
                if f(lo) < 0 < f(hi):
                    break
                lo, hi = 0.5 * lo, 2 * hi
            y = brentq(f, lo, hi, xtol=1e-15, rtol=1e-13, maxiter=200)
        except ValueError as exc:
            raise GeometryError(f"height root solve failed for a_minus = {a:g}: {exc}") from exc
        a_m, a_p = probe.angles(y)
        am.append(a_m)
        ap.append(a_p)
        ys.append(y)
    am, ap, ys = map(np.array, (am, ap, ys))
    ratio = ap / am
    if ratio.size >= 2:
        a1, a2, r1, r2 = am[-2], am[-1], ratio[-2], ratio[-1]
        limit = float((a1**2 * r2 - a2**2 * r1) / (a1**2 - a2**2))
    else:
        limit = float(ratio[-1])
    ident = np.abs((1 - np.cos(ap)) / kp - (1 - np.cos(am)) / km)
    return JumpRatioResult(float(s_star), km, kp, am, ap, ys, ratio, limit, ident)


def hubacher_certificate(table, s_star=None, a_minus_list=(0.08, 0.04, 0.02, 0.01), rel_tol=0.02):
    """Pass iff the extrapolated ratio is within ``rel_tol`` of ``sqrt(kappa_plus / kappa_minus)``.

    Without ``s_star`` every breakpoint with a curvature drop is tested.
    """
    from .certificates import as_table
    table = as_table(table)
    pts = descending_jumps(table.curve) if s_star is None else np.atleast_1d(s_star)
    tols = {"rel_tol": rel_tol, "a_minus_list": list(a_minus_list)}
    if len(pts) == 0:
        return CertificateReport("hubacher", "inconclusive", [], tols, "table has no curvature drop")
    wit, rows = [], []
    for s in pts:
        r = hubacher_jump_ratio(table, float(s), a_minus_list)
        row = {"s_star": r.s_star, "kappa_minus": r.kappa_minus, "kappa_plus": r.kappa_plus,
               "limit": r.limit, "expected": r.expected, "rel_error": r.rel_error, "rows": r.rows()}
        rows.append(row)
        if not r.rel_error < rel_tol:
            wit.append(witness({"s_star": r.s_star}, {"limit": r.limit, "expected": r.expected}))
    return CertificateReport("hubacher", "fail" if wit else "pass", wit, tols,
                             summary={"ratio": rows[0]["limit"], "jumps": rows})
