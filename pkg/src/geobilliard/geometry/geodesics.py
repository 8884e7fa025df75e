"""Geodesic integration, exponential and logarithm maps, Jacobi fields, angles."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from ..exceptions import ConvergenceError, DomainError, NeighborhoodError
from .charts import as_points, pull_back, push_forward

RTOL = 1e-11
ATOL = 1e-13


@dataclass(frozen=True)
class GeodesicState:
    """Point, velocity and accumulated arclength along a geodesic."""

    point: np.ndarray
    velocity: np.ndarray
    arclength: float


@dataclass(frozen=True)
class JacobiSolution:
    """Normal Jacobi field with ``J(0) = 0, J'(0) = 1`` evaluated at ``at_length``."""

    J: float
    Jprime: float
    at_length: float


@dataclass
class GeodesicTrace:
    """Output of :func:`integrate_geodesic`.

    Attributes
    ----------
    t : ndarray
        Arclength nodes of the accepted steps.
    states : ndarray, shape (n, 4) or (n, 6)
        ``(u, v, du, dv[, J, J'])`` at the nodes.
    sol : callable or None
        Dense output, ``sol(t) -> state`` (columns as ``states``).
    exited : bool
        True if the chart domain was left before ``length`` was reached.
    exit_point : ndarray or None
    """

    t: np.ndarray
    states: np.ndarray
    sol: object
    exited: bool = False
    exit_point: Optional[np.ndarray] = None

    @property
    def length(self):
        return float(self.t[-1])

    @property
    def end(self):
        y = self.states[-1]
        return GeodesicState(y[:2].copy(), y[2:4].copy(), self.length)

    def state_at(self, t):
        y = self.sol(t)
        return GeodesicState(y[:2], y[2:4], float(t))

    def polyline(self, n=64):
        ts = np.linspace(0.0, self.length, max(int(n), 2))
        return self.sol(ts)[:2].T

    @property
    def has_jacobi(self):
        return self.states.shape[1] == 6


def christoffel(chart, p):
    """Christoffel symbols ``G[k, i, j]`` at ``p``."""
    p = as_points(p)
    chart.check_point(p)
    return chart.christoffel(p)


def _check_unit(chart, p, v, tol=1e-8):
    n = float(chart.norm(p, v))
    if abs(n - 1.0) > tol:
        raise ValueError(f"start velocity must be unit (|v| = {n:.12g})")


def integrate_geodesic(chart, p, v, length, *, jacobi=False, events=(), max_step=np.inf,
                       rtol=RTOL, atol=ATOL):
    """Integrate the unit-speed geodesic from ``p`` with velocity ``v``.

    Parameters
    ----------
    chart : SurfaceChart
    p, v : array_like, shape (2,)
        Start point and unit velocity (chart components).
    length : float
        Arclength to integrate.
    jacobi : bool
        Integrate ``J'' + K J = 0`` (``J(0)=0, J'(0)=1``) alongside.
    events : sequence of callables
        Extra ``solve_ivp`` events ``f(t, y)``; only the domain-exit event
        is terminal unless the callable sets ``terminal``.

    Returns
    -------
    GeodesicTrace
    """
    p, v = as_points(p).astype(float), as_points(v).astype(float)
    chart.check_point(p)
    _check_unit(chart, p, v)
    y0 = np.r_[p, v, 0.0, 1.0] if jacobi else np.r_[p, v]

    def rhs(t, y):
        x, w = y[:2], y[2:4]
        a = chart.geodesic_acceleration(x, w)
        if jacobi:
            return np.r_[w, a, y[5], -chart.gauss_curvature(x) * y[4]]
        return np.r_[w, a]

    def leave(t, y):
        return chart.domain_margin(y[:2])
    leave.terminal = True
    leave.direction = -1

    res = solve_ivp(rhs, (0.0, float(length)), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=[leave, *events], max_step=max_step)
    if res.status < 0:
        raise ConvergenceError(f"geodesic integration failed: {res.message}")
    exited = res.status == 1 and res.t_events[0].size > 0
    trace = GeodesicTrace(res.t, res.y.T.copy(), res.sol, exited,
                          res.y[:2, -1].copy() if exited else None)
    trace.t_events = res.t_events[1:]
    trace.y_events = res.y_events[1:]
    return trace


def _shoot_many(chart, P, W, dense=False):
    """Endpoints ``exp_P(W)`` for many vectors at once (affine time in [0, 1]).

    With ``dense=True`` return a callable ``tau -> (m, 2)`` positions instead.
    """
    P, W = np.atleast_2d(P), np.atleast_2d(W)
    m = P.shape[0]

    def rhs(t, y):
        Y = y.reshape(4, m)
        x, w = Y[:2].T, Y[2:].T
        a = chart.geodesic_acceleration(x, w)
        out = np.concatenate([w, a], axis=1)
        out[chart.domain_margin(x) <= 0] = 0.0  # freeze trajectories that left
        return out.T.ravel()

    y0 = np.concatenate([P, W], axis=1).T.ravel()
    res = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=dense)
    if res.status < 0:
        raise ConvergenceError(f"geodesic integration failed: {res.message}")
    if dense:
        return lambda tau: res.sol(tau).reshape(4, m)[:2].T
    Y = res.y[:, -1].reshape(4, m)
    out = Y[:2].T
    if np.any(chart.domain_margin(out) <= 0):
        raise DomainError("geodesic left the chart domain")
    return out


def _pick_method(chart, method):
    if method == "auto":
        return "closed" if chart.closed_form else "ode"
    if method == "closed" and not chart.closed_form:
        raise ValueError(f"{chart!r} has no closed-form geodesics")
    if method not in ("closed", "ode"):
        raise ValueError(f"unknown method {method!r}")
    return method


def exp_map(chart, p, w, method="auto"):
    """Riemannian exponential ``exp_p(w)``.

    Raises
    ------
    NeighborhoodError
        If ``|w|`` exceeds the chart's normal radius.
    """
    p, w = as_points(p), as_points(w)
    chart.check_point(p)
    r = chart.norm(p, w)
    if np.any(r > chart.normal_radius):
        raise NeighborhoodError(f"|w| = {np.max(r):.6g} exceeds normal radius {chart.normal_radius:.6g}")
    if _pick_method(chart, method) == "closed":
        X = chart.to_hom(p)
        V = push_forward(chart, p, w)
        rr = np.where(r > 0, r, 1.0)
        q = chart.from_hom(chart.model.exp(X, V / rr[..., None], r))
    elif p.ndim == 1:
        q = p.copy() if r == 0 else _shoot_many(chart, p, w)[0]
    else:
        q = _shoot_many(chart, p, w)
    chart.check_point(q)
    return q


def _segment_length(chart, p, q, n=32):
    x, wts = np.polynomial.legendre.leggauss(n)
    tau = 0.5 * (x + 1)
    d = q - p
    pts = p + tau[:, None] * d
    return 0.5 * float(np.sum(wts * chart.norm(pts, np.broadcast_to(d, pts.shape))))


def log_map(chart, p, q, method="auto", max_iter=50, tol=1e-12, n_scan=64):
    """Riemannian logarithm: the tangent vector ``w`` at ``p`` with ``exp_p(w) = q``.

    The closed-form route uses the ambient model; the ODE route solves the
    shooting problem by a coarse angular scan followed by Newton iteration
    with backtracking (factor 0.5).
    """
    p, q = as_points(p).astype(float), as_points(q).astype(float)
    chart.check_point(p)
    chart.check_point(q)
    if _pick_method(chart, method) == "closed":
        X, Y = chart.to_hom(p), chart.to_hom(q)
        D = chart.model.log_dir(X, Y)
        n = np.sqrt(np.maximum(chart.model.inner(D, D), 0.0))
        d = chart.model.dist(X, Y)
        scale = np.where(n > 0, d / np.where(n > 0, n, 1.0), 0.0)
        w = pull_back(chart, p, D * scale[..., None])
        if np.any(d > chart.normal_radius):
            raise NeighborhoodError(f"d(p, q) = {np.max(d):.6g} exceeds normal radius")
        return w
    if p.ndim > 1:
        return np.stack([log_map(chart, a, b, "ode", max_iter, tol, n_scan) for a, b in zip(p, q)])
    if np.array_equal(p, q):
        return np.zeros(2)
    return _log_shoot(chart, p, q, max_iter, tol, n_scan)


def _log_shoot(chart, p, q, max_iter, tol, n_scan):
    e1, e2 = chart.orthonormal_frame(p)
    E = np.stack([e1, e2], axis=1)
    seg = _segment_length(chart, p, q)
    reach = min(1.25 * seg, chart.normal_radius)
    ang = 2 * np.pi * np.arange(n_scan) / n_scan
    C = reach * np.c_[np.cos(ang), np.sin(ang)]
    # coarse scan: closest approach of each ray to q along the dense output
    ray = _shoot_many(chart, np.broadcast_to(p, C.shape), C @ E.T, dense=True)
    best, c = np.inf, None
    for f in np.linspace(0.05, 1.0, 40):
        pts = ray(f)
        miss = np.linalg.norm(pts - q, axis=1)
        miss[chart.domain_margin(pts) <= 0] = np.inf
        k = int(np.argmin(miss))
        if miss[k] < best:
            best, c = miss[k], f * C[k]
    if c is None:
        raise ConvergenceError("angular scan found no admissible shooting seed")

    def F(cs):
        return _shoot_many(chart, np.broadcast_to(p, cs.shape), cs @ E.T) - q

    r = F(c[None])[0]
    res = np.linalg.norm(r)
    for _ in range(max_iter):
        if res < tol:
            break
        h = 1e-6 * max(np.linalg.norm(c), 1e-3)
        stencil = np.stack([c + h * np.eye(2)[0], c - h * np.eye(2)[0],
                            c + h * np.eye(2)[1], c - h * np.eye(2)[1]])
        Fs = F(stencil)
        Jac = np.stack([(Fs[0] - Fs[1]) / (2 * h), (Fs[2] - Fs[3]) / (2 * h)], axis=1)
        step = np.linalg.solve(Jac, r)
        lam = 1.0
        while True:
            cn = c - lam * step
            try:
                rn = F(cn[None])[0]
                resn = np.linalg.norm(rn)
            except DomainError:
                resn = np.inf
            if resn < res or lam < 1e-4:
                break
            lam *= 0.5
        if not resn < res:
            break
        c, r, res = cn, rn, resn
    if res > 1e-10:
        raise ConvergenceError(f"log_map shooting did not converge (residual {res:.3e})", res)
    return E @ c


def distance(chart, p, q, method="auto"):
    """Geodesic distance ``|log_p(q)|``."""
    p, q = as_points(p), as_points(q)
    if chart.closed_form and method in ("auto", "closed"):
        return chart.model.dist(chart.to_hom(p), chart.to_hom(q))
    return chart.norm(p, log_map(chart, p, q, method))


def jacobi_endpoint(chart, trace):
    """``(J, J')`` at the end of ``trace`` for ``J(0) = 0, J'(0) = 1``."""
    if trace.has_jacobi:
        y = trace.states[-1]
        return JacobiSolution(float(y[4]), float(y[5]), trace.length)

    def rhs(t, y):
        x = trace.sol(t)[:2]
        return [y[1], -chart.gauss_curvature(x) * y[0]]

    res = solve_ivp(rhs, (0.0, trace.length), [0.0, 1.0], method="DOP853", rtol=RTOL, atol=ATOL)
    return JacobiSolution(float(res.y[0, -1]), float(res.y[1, -1]), trace.length)


def oriented_angle(chart, p, w1, w2):
    """Oriented angle from ``w1`` to ``w2`` at ``p``, in ``[0, 2 pi)``."""
    p, w1, w2 = as_points(p), as_points(w1), as_points(w2)
    if np.any(chart.norm(p, w1) == 0) or np.any(chart.norm(p, w2) == 0):
        raise ValueError("oriented_angle needs nonzero vectors")
    a = np.arctan2(chart.inner(p, chart.rotate(p, w1), w2), chart.inner(p, w1, w2))
    return np.mod(a, 2 * np.pi)


def exp_differential_norm(chart, p, v, h=1e-6):
    """Largest singular value of ``d(exp_p)`` at ``v`` (orthonormal frames)."""
    e1, e2 = chart.orthonormal_frame(p)
    q = exp_map(chart, p, v)
    cols = [(exp_map(chart, p, v + h * e) - exp_map(chart, p, v - h * e)) / (2 * h) for e in (e1, e2)]
    D = np.stack(cols, axis=1)
    f1, f2 = chart.orthonormal_frame(q)
    F = np.stack([f1, f2], axis=1)
    G = chart.metric(q)
    M = F.T @ G @ D  # components of dexp columns in the orthonormal frame at q
    return float(np.linalg.svd(M, compute_uv=False)[0])
