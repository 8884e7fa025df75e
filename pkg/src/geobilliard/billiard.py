"""The billiard map on a convex table, orbits, rotation numbers and the generating function.

Phase coordinates are ``(s, theta)``: arclength of the impact point and the
outgoing angle measured from the positive tangent toward the interior.
Internally the map works in the curve parameter ``t in [0, 1)``; lifted
parameters ``t + k`` count full turns.
"""
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.spatial import cKDTree

from .exceptions import DomainError, GeometryError, GrazingError, StepDegeneracyError
from .geometry.charts import push_forward
from .geometry.geodesics import ATOL, RTOL, log_map

THETA_MIN = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    s: float
    theta: float


@dataclass
class Chord:
    """Geodesic segment between two impacts."""

    s1: float
    s2: float
    H: float
    theta1: float
    theta2: float
    trace: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class LiftedOrbit:
    """Orbit with unreduced arclengths ``s[n]`` (``s[0]`` in ``[0, L)``)."""

    s: np.ndarray
    theta: np.ndarray
    H: np.ndarray
    L: float
    chords: Optional[list] = field(default=None, repr=False)

    @property
    def n_bounces(self):
        return len(self.s) - 1

    @property
    def s_reduced(self):
        return np.mod(self.s, self.L)


class BilliardTable:
    """Billiard in the region bounded by ``curve``.

    Parameters
    ----------
    curve : BoundaryCurve
    theta_min : float
        Grazing cutoff: angles within ``theta_min`` of 0 or pi are fixed.
    engine : {"auto", "closed", "ode"}
        ``"closed"`` uses the ambient model of constant-curvature charts;
        ``"ode"`` integrates geodesics and detects the boundary crossing.
    """

    def __init__(self, curve, theta_min=THETA_MIN, engine="auto"):
        self.curve = curve
        self.chart = curve.chart
        self.L = curve.length
        self.theta_min = float(theta_min)
        if engine == "auto":
            engine = "closed" if self.chart.closed_form else "ode"
        if engine == "closed" and not self.chart.closed_form:
            raise ValueError("closed-form engine needs a constant-curvature chart")
        self.engine = engine
        self._tree = None

    def __repr__(self):
        return f"BilliardTable({self.curve!r}, engine={self.engine!r})"

    # --- parameter <-> arclength with lifts ----------------------------------
    def _lifted_s(self, t_lift):
        k = np.floor(t_lift)
        return k * self.L + self.curve.s_of_t(t_lift - k)

    def _arc_between(self, t1, t2):
        """Arclength from ``t1`` to the lifted ``t2 in [t1, t1 + 1)``."""
        s1 = self.curve.s_of_t(t1)
        k = np.floor(t2)
        s2 = self.curve.s_of_t(t2 - k) + k * self.L
        return np.maximum(s2 - s1, 0.0)

    # --- vectorized map in the curve parameter -------------------------------
    def step_t(self, t1, theta):
        """One bounce from parameters ``t1`` with angles ``theta``.

        Returns
        -------
        t2 : ndarray
            Lifted parameter in ``(t1, t1 + 1)`` (equal to ``t1`` when grazing).
        theta2, H : ndarray
        """
        t1 = np.atleast_1d(np.asarray(t1, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        t1, theta = np.broadcast_arrays(t1, theta)
        t2, th2, H = t1.copy(), theta.copy(), np.zeros(t1.shape)
        live = (theta > self.theta_min) & (theta < np.pi - self.theta_min)
        if np.any(live):
            if self.engine == "closed":
                a, b, c = self._step_closed(t1[live], theta[live])
            else:
                a, b, c = self._step_ode(t1[live], theta[live])
            t2[live], th2[live], H[live] = a, b, c
        return t2, th2, H

    def map(self, s, theta):
        """Vectorized billiard map.

        Returns
        -------
        s2 : ndarray
            Lifted arclength in ``(s, s + L)``.
        theta2, H : ndarray
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        base = np.floor(s / self.L) * self.L
        t1 = self.curve.t_of_s(s - base)
        t2, th2, H = self.step_t(t1, theta)
        s1r = s - base
        return s1r + self._arc_between(t1, t2) + base, th2, H

    def inverse(self, s, theta):
        """Inverse map by time reversal ``theta -> pi - theta``."""
        s2, th2, H = self.map(s, np.pi - np.asarray(theta, dtype=float))
        moved = s2 != np.atleast_1d(s)
        return np.where(moved, s2 - self.L, s2), np.pi - th2, H

    # --- closed-form engine ---------------------------------------------------
    def _hom(self, t, order=1):
        d = self.curve.eval_t(t, order)
        X = self.chart.to_hom(d[0])
        if order == 0:
            return X
        return X, push_forward(self.chart, d[0], d[1])

    def _step_closed(self, t1, theta, max_iter=100):
        ch, curve = self.chart, self.curve
        model = ch.model
        x1, T1c, N1c = curve.frame_t(t1)
        X1 = ch.to_hom(x1)
        T1, N1 = push_forward(ch, x1, T1c), push_forward(ch, x1, N1c)
        V = np.cos(theta)[:, None] * T1 + np.sin(theta)[:, None] * N1
        nrm = np.cross(X1, V)
        d1 = curve.eval_t(t1, 1)
        sig = ch.norm(d1[0], d1[1])
        slope0 = np.sum(push_forward(ch, d1[0], d1[1]) * nrm, axis=-1)
        sgn_lo = np.sign(slope0)
        kap = np.maximum(curve.curvature_t(t1), 0.2 * 2 * np.pi / self.L)
        small = np.minimum(theta, np.pi - theta)
        guess = 2 * small / (kap * sig)
        tau = np.where(theta <= np.pi / 2, t1 + guess, t1 + 1 - guess)
        lo, hi = t1.copy(), t1 + 1.0
        tau = np.clip(tau, lo + 1e-3 * guess, hi - 1e-3 * guess)
        act = np.arange(t1.size)
        for _ in range(max_iter):
            if act.size == 0:
                break
            ta = tau[act]
            X, Xd = self._hom(np.mod(ta, 1.0))
            g = np.sum((X - X1[act]) * nrm[act], axis=-1)
            dg = np.sum(Xd * nrm[act], axis=-1)
            a, b = ta - t1[act], t1[act] + 1 - ta
            D, Dp = a * b, b - a
            h = g / D
            hp = (dg * D - g * Dp) / D**2
            same = np.sign(h) == sgn_lo[act]
            lo[act] = np.where(same, ta, lo[act])
            hi[act] = np.where(same, hi[act], ta)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = ta - h / hp
            ok = np.isfinite(newton) & (newton >= lo[act]) & (newton <= hi[act])
            new = np.where(ok, newton, 0.5 * (lo[act] + hi[act]))
            new = np.where(h == 0, ta, new)
            conv = (np.abs(new - ta) <= 4e-15 * np.maximum(1.0, np.abs(ta))) | (h == 0) \
                | (hi[act] - lo[act] <= 1e-13 * np.maximum(1.0, np.abs(ta)))
            tau[act] = new
            act = act[~conv]
        else:
            if act.size:
                raise GeometryError(f"boundary hit not resolved for {act.size} phase points")
        x2, T2c, N2c = curve.frame_t(np.mod(tau, 1.0))
        X2 = ch.to_hom(x2)
        T2, N2 = push_forward(ch, x2, T2c), push_forward(ch, x2, N2c)
        w = model.log_dir(X2, X1)
        th2 = np.arctan2(model.inner(w, N2), -model.inner(w, T2))
        return tau, th2, model.dist(X1, X2)

    # --- ODE engine -------------------------------------------------------------
    def _projection_tree(self):
        if self._tree is None:
            n = 1024 * self.curve.n_pieces
            self._tree_t = np.arange(n) / n
            self._tree = cKDTree(self.curve.eval_t(self._tree_t, 0)[0])
        return self._tree

    def crossing_functional(self, x):
        """Signed chart distance to the boundary along its outward chart normal.

        Returns ``(F, t)``: ``F > 0`` outside; ``t`` is the foot parameter.
        """
        tree = self._projection_tree()
        _, i = tree.query(x)
        t = self._tree_t[i]
        for _ in range(6):
            d = self.curve.eval_t(np.array([t]), 2)[:, 0]
            r = d[0] - x
            f = r @ d[1]
            fp = d[1] @ d[1] + r @ d[2]
            t = t - f / fp
        d = self.curve.eval_t(np.array([t]), 1)[:, 0]
        tang = d[1] / np.linalg.norm(d[1])
        n_out = np.array([tang[1], -tang[0]])
        return float((x - d[0]) @ n_out), float(np.mod(t, 1.0))

    def shoot(self, x, v, max_length=None, want_trace=False):
        """Follow the geodesic from ``x`` (unit velocity ``v``) to the boundary.

        Returns
        -------
        dict
            ``t`` (foot parameter), ``H`` (length), ``velocity`` (arrival),
            ``point`` and optionally ``trace`` (dense solution).
        """
        ch = self.chart
        Lmax = 2 * self.L if max_length is None else max_length

        def rhs(t, y):
            return np.r_[y[2:], ch.geodesic_acceleration(y[:2], y[2:])]

        def cross(t, y):
            return self.crossing_functional(y[:2])[0]
        cross.terminal = True
        cross.direction = 1
        F0 = self.crossing_functional(x)[0]
        ms = self._max_step if hasattr(self, "_max_step") else self.L / 32
        res = solve_ivp(rhs, (0.0, Lmax), np.r_[x, v], method="DOP853", rtol=RTOL, atol=ATOL,
                        events=cross, dense_output=True, max_step=ms,
                        first_step=min(ms, 1e-3 * self.L))
        if res.status != 1 or res.t_events[0].size == 0:
            raise GeometryError(f"no boundary crossing within length {Lmax:.4g} (start F={F0:.2e})")
        tH = float(res.t_events[0][0])
        y = res.y_events[0][0]
        _, t2 = self.crossing_functional(y[:2])
        out = {"t": t2, "H": tH, "velocity": y[2:], "point": y[:2]}
        if want_trace:
            out["trace"] = res.sol
        return out

    def _step_ode(self, t1, theta, want_trace=False):
        curve, ch = self.curve, self.chart
        t2, th2, H, traces = np.empty(t1.size), np.empty(t1.size), np.empty(t1.size), []
        kmax = max(float(np.max(np.abs(curve.curvature_t(np.linspace(0, 1, 257))))), 1e-3)
        for i in range(t1.size):
            x1, T1, N1 = (a[0] for a in curve.frame_t(t1[i:i + 1]))
            th = theta[i]
            v = np.cos(th) * T1 + np.sin(th) * N1
            small = min(th, np.pi - th)
            self._max_step = min(self.L / 32, max(0.25 * small / kmax, 1e-9))
            try:
                hit = self.shoot(x1, v, want_trace=want_trace)
            finally:
                del self._max_step
            ta = hit["t"]
            t2[i] = ta if ta > t1[i] else ta + 1.0
            x2, T2, N2 = (a[0] for a in curve.frame_t(np.array([ta])))
            u = hit["velocity"]
            th2[i] = np.arctan2(-ch.inner(x2, u, N2), ch.inner(x2, u, T2))
            H[i] = hit["H"]
            if want_trace:
                traces.append((hit["trace"], hit["H"]))
        if want_trace:
            self._last_traces = traces
        return t2, th2, H

    # --- generating function ---------------------------------------------------
    def chord_data(self, s1, s2):
        """Length and end angles of the chord between two boundary points.

        Returns
        -------
        H, theta1, theta2 : ndarray
        """
        s1, s2 = np.atleast_1d(s1).astype(float), np.atleast_1d(s2).astype(float)
        ch = self.chart
        x1, T1, N1 = self.curve.frame(s1)
        x2, T2, N2 = self.curve.frame(s2)
        if ch.closed_form:
            m = ch.model
            X1, X2 = ch.to_hom(x1), ch.to_hom(x2)
            w1, w2 = m.log_dir(X1, X2), m.log_dir(X2, X1)
            P = lambda x, a: push_forward(ch, x, a)  # noqa: E731
            th1 = np.arctan2(m.inner(w1, P(x1, N1)), m.inner(w1, P(x1, T1)))
            th2 = np.arctan2(m.inner(w2, P(x2, N2)), -m.inner(w2, P(x2, T2)))
            return m.dist(X1, X2), th1, th2
        w1 = log_map(ch, x1, x2)
        w2 = log_map(ch, x2, x1)
        th1 = np.arctan2(ch.inner(x1, w1, N1), ch.inner(x1, w1, T1))
        th2 = np.arctan2(ch.inner(x2, w2, N2), -ch.inner(x2, w2, T2))
        return ch.norm(x1, w1), th1, th2

    def H(self, s1, s2):
        s1, s2 = np.broadcast_arrays(np.atleast_1d(s1).astype(float), np.atleast_1d(s2).astype(float))
        ch = self.chart
        x1, x2 = self.curve.point(s1), self.curve.point(s2)
        if ch.closed_form:
            return ch.model.dist(ch.to_hom(x1), ch.to_hom(x2))
        out = np.zeros(s1.shape)
        same = np.mod(s1 - s2, self.L) == 0
        for i in np.flatnonzero(~same):
            out[i] = ch.norm(x1[i], log_map(ch, x1[i], x2[i]))
        return out


# --- scalar public API -------------------------------------------------------------
def _chord_trace(table, s1, theta1, H, n=64):
    ch, curve = table.chart, table.curve
    x1, T1, N1 = (a[0] for a in curve.frame(np.array([s1])))
    v = np.cos(theta1) * T1 + np.sin(theta1) * N1
    ts = np.linspace(0.0, H, n)
    if ch.closed_form:
        X1 = ch.to_hom(x1)
        V = push_forward(ch, x1, v)
        return ch.from_hom(ch.model.exp(np.broadcast_to(X1, (n, 3)), np.broadcast_to(V, (n, 3)), ts))
    hit = table.shoot(x1, v, want_trace=True)
    return hit["trace"](np.linspace(0.0, hit["H"], n))[:2].T


def billiard_map(table, p, trace=True):
    """Apply the billiard map to ``p``.

    Returns
    -------
    PhasePoint, Chord

    Raises
    ------
    GrazingError
        If ``0 < theta < theta_min`` (or symmetrically near pi).
    """
    s, th = float(p.s), float(p.theta)
    if th in (0.0, np.pi):
        return PhasePoint(np.mod(s, table.L), th), None
    if not 0.0 < th < np.pi:
        raise ValueError("theta must lie in [0, pi]")
    if min(th, np.pi - th) <= table.theta_min:
        raise GrazingError(f"theta = {th:.3e} is below the grazing cutoff {table.theta_min:.1e}")
    s1 = np.mod(s, table.L)
    s2, th2, H = table.map(s1, th)
    chord = Chord(s1, float(s2[0]), float(H[0]), th, float(th2[0]),
                  _chord_trace(table, s1, th, float(H[0])) if trace else None)
    return PhasePoint(float(np.mod(s2[0], table.L)), float(th2[0])), chord


def inverse_map(table, p):
    """Inverse billiard map (``billiard_map`` conjugated by ``theta -> pi - theta``)."""
    q, _ = billiard_map(table, PhasePoint(p.s, np.pi - p.theta), trace=False)
    return PhasePoint(q.s, np.pi - q.theta)


def iterate_many(table, s0, theta0, n):
    """Iterate many orbits at once.

    Returns
    -------
    s : ndarray, shape (n + 1, m)
        Lifted arclengths.
    theta, H : ndarray, shapes (n + 1, m) and (n, m)
    """
    s0 = np.mod(np.atleast_1d(np.asarray(s0, dtype=float)), table.L)
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    s0, theta0 = np.broadcast_arrays(s0, theta0)
    m = s0.size
    T = np.empty((n + 1, m))
    TH = np.empty((n + 1, m))
    H = np.empty((n, m))
    T[0] = table.curve.t_of_s(s0)
    TH[0] = theta0
    t = T[0].copy()
    for k in range(n):
        t2, th2, h = table.step_t(np.mod(t, 1.0), TH[k])
        t = t + (t2 - np.mod(t, 1.0))
        T[k + 1], TH[k + 1], H[k] = t, th2, h
    S = table._lifted_s(T)
    S[0] = s0
    return S, TH, H


def iterate(table, p, n, record_chords=False):
    """Iterate ``n`` bounces from ``p`` keeping a continuous lift."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not record_chords:
        S, TH, H = iterate_many(table, p.s, p.theta, n)
        return LiftedOrbit(S[:, 0], TH[:, 0], H[:, 0], table.L)
    s, th = [np.mod(p.s, table.L)], [p.theta]
    hs, chords = [], []
    for k in range(n):
        try:
            q, ch = billiard_map(table, PhasePoint(s[-1], th[-1]))
        except Exception as exc:
            raise type(exc)(f"bounce {k}: {exc}") from exc
        ds = (ch.s2 - ch.s1) if ch is not None else 0.0
        s.append(s[-1] + ds)
        th.append(q.theta)
        hs.append(ch.H if ch is not None else 0.0)
        chords.append(ch)
    return LiftedOrbit(np.array(s), np.array(th), np.array(hs), table.L, chords)


def _bump_weights(n):
    x = (np.arange(n) + 0.5) / n
    w = np.exp(-1.0 / (x * (1 - x)))
    return w / w.sum()


@dataclass
class RotationEstimate:
    value: float
    error: float
    raw: float
    n: int

    def __float__(self):
        return self.value


def rotation_number(orbit):
    """Rotation number of a lifted orbit (turns per bounce).

    Uses a weighted Birkhoff average of the lift increments with a smooth
    bump weight; the error bar is the difference of the estimates on the
    two halves of the orbit.  ``raw`` is ``(s_N - s_0) / (N L)``.
    """
    inc = np.diff(np.asarray(orbit.s)) / orbit.L
    n = inc.size
    if n < 100:
        warnings.warn("rotation number from fewer than 100 bounces is imprecise", stacklevel=2)
    if n == 0:
        return RotationEstimate(0.0, np.inf, 0.0, 0)
    val = float(_bump_weights(n) @ inc)
    h = n // 2
    err = abs(float(_bump_weights(h) @ inc[:h]) - float(_bump_weights(n - h) @ inc[h:])) if h > 0 else np.inf
    raw = float((orbit.s[-1] - orbit.s[0]) / (n * orbit.L))
    return RotationEstimate(val, err, raw, n)


def generating_H(table, s1, s2):
    """Geodesic distance between ``gamma(s1)`` and ``gamma(s2)`` (0 on the diagonal)."""
    if np.mod(float(s1) - float(s2), table.L) == 0:
        return 0.0
    return float(table.H(s1, s2)[0])


def _richardson(f, h):
    return (4 * f(h / 2) - f(h)) / 3


def H_partials(table, s1, s2, h1=None, h2=None):
    """Finite-difference partials of ``H`` at ``(s1, s2)``.

    Central differences with steps ``h1 = 1e-5 L`` (first derivatives) and
    ``h2 = 1e-4 L`` (second derivatives), each with one Richardson level.
    Vectorized over ``s1`` and ``s2``.

    Returns
    -------
    dict with keys ``d1, d2, d11, d22, d12``
    """
    L = table.L
    s1, s2 = np.broadcast_arrays(np.atleast_1d(s1).astype(float), np.atleast_1d(s2).astype(float))
    sep = np.abs(np.mod(s1 - s2 + 0.5 * L, L) - 0.5 * L)
    if np.any(sep <= 1e-3 * L):
        raise StepDegeneracyError("H_partials needs |s1 - s2| > 1e-3 L")
    h1 = 1e-5 * L if h1 is None else h1
    h2 = 1e-4 * L if h2 is None else h2
    Hf = table.H
    d1 = _richardson(lambda h: (Hf(s1 + h, s2) - Hf(s1 - h, s2)) / (2 * h), h1)
    d2 = _richardson(lambda h: (Hf(s1, s2 + h) - Hf(s1, s2 - h)) / (2 * h), h1)
    H0 = Hf(s1, s2)
    d11 = _richardson(lambda h: (Hf(s1 + h, s2) - 2 * H0 + Hf(s1 - h, s2)) / h**2, h2)
    d22 = _richardson(lambda h: (Hf(s1, s2 + h) - 2 * H0 + Hf(s1, s2 - h)) / h**2, h2)
    d12 = _richardson(lambda h: (Hf(s1 + h, s2 + h) - Hf(s1 + h, s2 - h)
                                 - Hf(s1 - h, s2 + h) + Hf(s1 - h, s2 - h)) / (4 * h * h), h2)
    return {"d1": d1, "d2": d2, "d11": d11, "d22": d22, "d12": d12}


def map_jacobian(table, s, theta, coords="rho", h=1e-5):
    """Finite-difference Jacobian of the map, vectorized.

    ``coords="rho"`` differentiates in ``(s, rho = cos theta)``, otherwise in
    ``(s, theta)``.  Returns an array ``(..., 2, 2)``.
    """
    s, theta = np.broadcast_arrays(np.atleast_1d(s).astype(float), np.atleast_1d(theta).astype(float))
    hs = h * table.L
    if coords == "rho":
        rho = np.cos(theta)
        hr = np.minimum(h, 0.25 * (1 - np.abs(rho)))

        def F(ss, rr):
            s2, th2, _ = table.map(ss, np.arccos(rr))
            return np.stack([s2, np.cos(th2)])
        y = rho
    else:
        hr = np.full(s.shape, h)

        def F(ss, tt):
            s2, th2, _ = table.map(ss, tt)
            return np.stack([s2, th2])
        y = theta
    ds = _richardson(lambda k: (F(s + k, y) - F(s - k, y)) / (2 * k), hs)
    dy = _richardson(lambda k: (F(s, y + k) - F(s, y - k)) / (2 * k), hr)
    return np.stack([ds.T, dy.T], axis=-1)


def measure_jacobian_check(table, p, delta=1e-3):
    """``|det DT - 1|`` in ``(s, rho = cos theta)`` coordinates at ``p`` (vectorized)."""
    s, th = (p.s, p.theta) if isinstance(p, PhasePoint) else p
    s, th = np.atleast_1d(s), np.atleast_1d(th)
    if np.any(th <= delta) or np.any(th >= np.pi - delta):
        raise DomainError(f"theta must lie in ({delta}, pi - {delta}) for the measure check")
    J = map_jacobian(table, s, th, "rho")
    return np.abs(np.linalg.det(J) - 1.0)
