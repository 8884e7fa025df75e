"""Certificates for twist, near-grazing asymptotics, the Jacobi-field sign criterion,
the positive-curvature diameter bound, glancing orbits and constant-width tables."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ..billiard import (BilliardTable, H_partials, _richardson, iterate_many, map_jacobian,
                        measure_jacobian_check)
from ..curves.base import BoundaryCurve
from ..curves.convexity import convexity_certificate
from ..curves.width import WidthCurve
from ..exceptions import DomainError, GeoBilliardError, NeighborhoodError, PreconditionError
from ..geometry.geodesics import exp_differential_norm, integrate_geodesic, jacobi_endpoint, log_map
from ..geometry.models import SPHERE
from ..reports import CertificateReport, witness


def as_table(obj):
    """Accept a :class:`BilliardTable`, a :class:`BoundaryCurve` or a :class:`WidthCurve`."""
    if isinstance(obj, BilliardTable):
        return obj
    if isinstance(obj, WidthCurve):
        return BilliardTable(obj.table())
    if isinstance(obj, BoundaryCurve):
        return BilliardTable(obj)
    raise TypeError(f"cannot build a billiard table from {type(obj).__name__}")


def _separated(table, a, b, frac=1e-3):
    L = table.L
    return np.abs(np.mod(a - b + 0.5 * L, L) - 0.5 * L) > frac * L


# --- twist --------------------------------------------------------------------------
def twist_certificate(table, grid_n=20, delta=0.05, tol=1e-8):
    """Check ``ds2/dtheta1 > 0`` and ``d12 H > 0`` on a ``grid_n x grid_n`` phase grid.

    ``d12 H`` is evaluated at the chord ``(s1, s2 = T(s1, theta1))``; cells
    whose endpoints are closer than ``1e-3 L`` are inconclusive.
    """
    table = as_table(table)
    L = table.L
    s = (np.arange(grid_n) + 0.5) * L / grid_n
    th = np.linspace(delta, np.pi - delta, grid_n)
    S, TH = (a.ravel() for a in np.meshgrid(s, th, indexing="ij"))
    dsdth = map_jacobian(table, S, TH, coords="theta")[:, 0, 1]
    s2, _, _ = table.map(S, TH)
    ok = _separated(table, S, s2) & np.isfinite(dsdth)
    d12 = np.full(S.shape, np.nan)
    if np.any(ok):
        d12[ok] = H_partials(table, S[ok], s2[ok])["d12"]
    wit = []
    for j in np.flatnonzero(ok & ((dsdth < -tol) | (d12 < -tol))):
        wit.append(witness({"s": S[j], "theta": TH[j]}, {"ds2_dtheta1": dsdth[j], "d12H": d12[j]}))
    n_inc = int(np.sum(~ok))
    summary = {"min_ds2_dtheta1": float(np.nanmin(dsdth)), "min_d12H": float(np.nanmin(d12)),
               "cells": int(S.size), "inconclusive_cells": n_inc}
    tols = {"violation_tol": tol, "delta": delta, "grid_n": grid_n, "fd_h1": 1e-5 * L, "fd_h2": 1e-4 * L}
    if wit:
        return CertificateReport("twist", "fail", wit, tols, summary=summary)
    if n_inc == S.size:
        return CertificateReport("twist", "inconclusive", [], tols, "every cell was FD-degenerate",
                                 summary)
    return CertificateReport("twist", "pass", [], tols, summary=summary)


# --- near-grazing asymptotics -----------------------------------------------------
@dataclass
class AsymptoticResidual:
    """Residuals ``r1 = |(s2 - s1) kappa / (2 theta) - 1|`` and ``r2 = |theta2 / theta - 1|``."""

    s: float
    kappa: float
    theta: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    truncated: bool

    @property
    def decreasing(self):
        return bool(np.all(np.diff(self.r1) < 0))

    def rows(self):
        return [{"theta": float(t), "r1": float(a), "r2": float(b)}
                for t, a, b in zip(self.theta, self.r1, self.r2)]


def asymptotic_residual(table, s, theta_list=(1e-1, 1e-2, 1e-3, 1e-4)):
    """Compare the map with ``s2 = s1 + 2 theta / kappa(s1)`` and ``theta2 = theta``.

    Angles at or below the grazing cutoff are dropped (``truncated`` is set).
    """
    table = as_table(table)
    th = np.asarray(theta_list, dtype=float)
    keep = th > table.theta_min
    th = th[keep]
    k = float(table.curve.lateral_curvature(s)[1][0])
    if k <= 0:
        raise PreconditionError(f"asymptotic residual needs kappa(s) > 0 (got {k:.3e})")
    s2, th2, _ = table.map(np.full(th.shape, float(s)), th)
    r1 = np.abs((s2 - s) * k / (2 * th) - 1)
    r2 = np.abs(th2 / th - 1)
    return AsymptoticResidual(float(s), k, th, r1, r2, not bool(np.all(keep)))


def asymptotic_certificate(table, s_list=None, theta_list=(1e-1, 1e-2, 1e-3, 1e-4), r1_tol=1e-2):
    """Pass iff ``r1`` decreases along ``theta_list`` and ends below ``r1_tol`` at every ``s``."""
    table = as_table(table)
    s_list = np.arange(4) * table.L / 4 + 0.1 * table.L if s_list is None else np.atleast_1d(s_list)
    wit, rows = [], []
    for s in s_list:
        res = asymptotic_residual(table, float(s), theta_list)
        rows.append({"s": float(s), "rows": res.rows()})
        if not (res.decreasing and res.r1[-1] < r1_tol):
            wit.append(witness({"s": s}, {"r1": res.r1, "r2": res.r2, "theta": res.theta}))
    tols = {"r1_tol": r1_tol, "theta_list": list(theta_list)}
    return CertificateReport("asymptotic", "fail" if wit else "pass", wit, tols, summary={"residuals": rows})


# --- invariant measure ------------------------------------------------------------
def measure_certificate(table, n=300, delta=1e-3, tol=1e-6, seed=0):
    """``|det DT - 1| < tol`` in ``(s, cos theta)`` at ``n`` random phase points."""
    table = as_table(table)
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, table.L, n)
    th = rng.uniform(max(delta, 0.05), np.pi - max(delta, 0.05), n)
    d = measure_jacobian_check(table, (s, th), delta)
    bad = np.flatnonzero(d >= tol)
    wit = [witness({"s": s[j], "theta": th[j]}, {"defect": d[j]}) for j in bad[np.argsort(-d[bad])][:10]]
    return CertificateReport("measure", "fail" if wit else "pass", wit,
                             {"tol": tol, "n": n, "delta": delta, "fd_h": 1e-5},
                             summary={"max_defect": float(d.max()), "mean_defect": float(d.mean())})


# --- Jacobi sign ------------------------------------------------------------------
@dataclass
class JacobiSignResult:
    """Second derivative of ``H`` in its second slot versus ``theta'^2 J J'``."""

    d22H: float
    theta_prime_sq: float
    J: float
    Jprime: float
    H: float
    defect: float

    @property
    def sign_agrees(self):
        return bool(np.sign(self.d22H) == np.sign(self.J * self.Jprime))


def _check_flat_point(curve, s1, kappa_tol):
    km, kp = curve.lateral_curvature(s1)
    if max(abs(km[0]), abs(kp[0])) >= kappa_tol:
        raise PreconditionError(f"kappa(s1) = {kp[0]:.3e} is not zero (tolerance {kappa_tol:g})")


def polar_angle_rate(table, s0, s1, h=None):
    """``d/ds`` of the polar angle of ``gamma(s)`` seen from ``gamma(s0)``, at ``s1``.

    The angle is measured in an orthonormal frame at ``gamma(s0)``; central
    differences with step ``h = 1e-5 L`` and one Richardson level.
    """
    ch, curve = table.chart, table.curve
    h = 1e-5 * table.L if h is None else h
    x0 = curve.point(s0)[0]
    e1, e2 = ch.orthonormal_frame(x0)

    def ang(s):
        w = log_map(ch, x0, curve.point(s)[0])
        return np.arctan2(ch.inner(x0, w, e2), ch.inner(x0, w, e1))

    def D(k):
        return np.angle(np.exp(1j * (ang(s1 + k) - ang(s1 - k)))) / (2 * k)
    return float(_richardson(D, h))


def mather_jacobi_sign(table, s0, s1, kappa_tol=1e-6):
    """Jacobi-field identity ``d22 H(s0, s1) = theta'^2 J(H) J'(H)`` at a flat point ``s1``.

    Raises
    ------
    PreconditionError
        If ``|kappa(s1)| >= kappa_tol``.
    """
    table = as_table(table)
    ch, curve = table.chart, table.curve
    _check_flat_point(curve, s1, kappa_tol)
    d22 = float(H_partials(table, s0, s1)["d22"][0])
    x0, x1 = curve.point(s0)[0], curve.point(s1)[0]
    w = log_map(ch, x0, x1)
    H = float(ch.norm(x0, w))
    tr = integrate_geodesic(ch, x0, w / H, H, jacobi=True)
    jac = jacobi_endpoint(ch, tr)
    tp = polar_angle_rate(table, s0, s1)
    return JacobiSignResult(d22, tp**2, jac.J, jac.Jprime, H, abs(d22 - tp**2 * jac.J * jac.Jprime))


def find_flat_point(curve, n=4096):
    """Arclength of the smallest ``|kappa|`` (grid search, then bounded refinement)."""
    s = np.arange(n) * curve.length / n
    k = np.abs(curve.curvature(s))
    i = int(np.argmin(k))
    h = curve.length / n
    res = minimize_scalar(lambda x: abs(float(curve.curvature(x)[0])), bounds=(s[i] - h, s[i] + h),
                          method="bounded", options={"xatol": 1e-13})
    best = float(res.x) if res.fun < k[i] else float(s[i])
    return float(np.mod(best, curve.length))


def theta_samples(n, delta):
    """``n`` angles in ``[delta, pi - delta]``, one of them exactly ``pi/2``."""
    th = np.linspace(delta, np.pi - delta, n)
    th[np.argmin(np.abs(th - np.pi / 2))] = np.pi / 2
    return th


def mather_certificate(table, s1, n_theta=180, delta=0.05, B_tol=1e-8, kappa_tol=1e-6,
                       check_convexity=True):
    """Sign certificate ``B = d22 H(s0, s1) + d11 H(s1, s2) > 0`` through a flat point.

    For each outgoing angle ``theta1`` at ``s1``, ``s0`` is the previous and
    ``s2`` the next impact.  Passing excludes rotational invariant curves
    through those chords; any ``B <= 0`` is a failing witness.
    """
    table = as_table(table)
    curve, L = table.curve, table.L
    _check_flat_point(curve, s1, kappa_tol)
    if check_convexity:
        rep = convexity_certificate(curve, eps=-1e-10, n_chords=200)
        if not rep.passed:
            raise PreconditionError("table is not (weakly) convex: " + str(rep.summary))
    th = theta_samples(n_theta, delta)
    s1v = np.full(th.shape, float(s1))
    s2, _, _ = table.map(s1v, th)
    s0, _, _ = table.inverse(s1v, th)
    ok = _separated(table, s0, s1v) & _separated(table, s1v, s2)
    B = np.full(th.shape, np.nan)
    if np.any(ok):
        B[ok] = (H_partials(table, s0[ok], s1v[ok])["d22"]
                 + H_partials(table, s1v[ok], s2[ok])["d11"])
    tols = {"B_tol": B_tol, "delta": delta, "n_theta": n_theta, "kappa_tol": kappa_tol,
            "fd_h2": 1e-4 * L}
    summary = {"min_B": float(np.nanmin(B)) if np.any(ok) else None, "inconclusive_cells": int(np.sum(~ok))}
    bad = np.flatnonzero(ok & (B <= 0))
    if bad.size:
        order = bad[np.argsort(np.abs(th[bad] - np.pi / 2))]
        wit = [witness({"theta1": th[j], "s0": np.mod(s0[j], L), "s1": s1, "s2": np.mod(s2[j], L)},
                       {"B": B[j]}) for j in order]
        return CertificateReport("mather", "fail", wit, tols, summary=summary)
    if not np.all(ok) or np.any(B[ok] <= B_tol):
        return CertificateReport("mather", "inconclusive", [], tols,
                                 "some cells were FD-degenerate or had 0 < B <= B_tol", summary)
    return CertificateReport("mather", "pass", [], tols, summary=summary)


# --- diameter bound ---------------------------------------------------------------
@dataclass
class DiameterBound:
    diameter: float
    bound: float
    K_max: float
    M: float

    @property
    def inside(self):
        return bool(self.diameter < self.bound)


def table_diameter(table, n=None):
    """Largest chord length ``max H``, sampled then polished by Nelder-Mead."""
    table = as_table(table)
    n = n or (160 if table.chart.closed_form else 24)
    s = np.arange(n) * table.L / n
    A, B = np.meshgrid(s, s, indexing="ij")
    Hm = table.H(A.ravel(), B.ravel()).reshape(n, n)
    i, j = np.unravel_index(np.argmax(Hm), Hm.shape)
    res = minimize(lambda x: -float(table.H(x[0], x[1])[0]), [s[i], s[j]], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14})
    return max(float(-res.fun), float(Hm[i, j]))


def _region_samples(curve, n_b=64, n_r=6):
    xb = curve.sample(n_b)
    c = xb.mean(axis=0)
    r = np.linspace(0.0, 1.0, n_r + 1)[1:]
    return np.concatenate([c[None], (c + r[:, None, None] * (xb - c)).reshape(-1, 2)])


def diameter_bound_check(table, n_exp=64, safety=1.05, seed=0):
    """Diameter versus the bound ``1 / sqrt(K_max M)`` for positively curved charts.

    ``M`` is ``safety`` times the largest sampled singular value of the
    exponential map differential over base points in the table and vectors
    of length up to the diameter.  A chart with ``K_max <= 0`` has an
    infinite bound.
    """
    table = as_table(table)
    ch = table.chart
    D = table_diameter(table)
    pts = _region_samples(table.curve)
    K = float(np.max(ch.gauss_curvature(pts)))
    if K <= 0:
        return DiameterBound(D, np.inf, K, np.nan)
    rng = np.random.default_rng(seed)
    sv = []
    for _ in range(n_exp):
        p = pts[rng.integers(len(pts))]
        e1, e2 = ch.orthonormal_frame(p)
        a = rng.uniform(0, 2 * np.pi)
        v = rng.uniform(0.05, 1.0) * D * (np.cos(a) * e1 + np.sin(a) * e2)
        try:
            sv.append(exp_differential_norm(ch, p, v))
        except (DomainError, NeighborhoodError):
            continue
    M = safety * max(sv + [1.0])
    return DiameterBound(D, 1.0 / np.sqrt(K * M), K, M)


# --- glancing orbits ---------------------------------------------------------------
@dataclass
class GlancingResult:
    s0: np.ndarray
    theta0: np.ndarray
    min_theta: np.ndarray
    at_floor: np.ndarray


def glancing_scan(table, s_start_list, n_bounces, theta0=0.3):
    """Smallest angle visited along each orbit (``at_floor`` marks the grazing cutoff)."""
    table = as_table(table)
    s0 = np.atleast_1d(np.asarray(s_start_list, dtype=float))
    th0 = np.broadcast_to(np.asarray(theta0, dtype=float), s0.shape)
    _, TH, _ = iterate_many(table, s0, th0, n_bounces)
    m = TH.min(axis=0)
    return GlancingResult(s0, np.array(th0), m, m <= table.theta_min)


# --- constant width --------------------------------------------------------------
def _wrap(x, L):
    return np.mod(x + 0.5 * L, L) - 0.5 * L


def _period_two_defect(table, n, seed):
    rng = np.random.default_rng(seed)
    s = np.sort(rng.uniform(0, table.L, n))
    th = np.full(n, np.pi / 2)
    s1, th1, _ = table.map(s, th)
    s2, th2, _ = table.map(np.mod(s1, table.L), th1)
    ds = np.abs(_wrap(s2 - s, table.L))
    dth = np.abs(th2 - np.pi / 2)
    return s, np.maximum(ds, dth)


def width_curve_verify(obj, lam=None, n=2001, n_period=50, tol=1e-6, seed=0):
    """Verify a constant-width table of width ``lam``.

    Checks (i) ``|d(alpha, beta) - lam| < tol`` for paired points, (ii) the
    connecting geodesic meets both curves at right angles within ``tol``
    radians and (iii) ``T^2(s, pi/2) = (s, pi/2)`` within ``tol`` at
    ``n_period`` sampled ``s``.

    ``obj`` is either a :class:`WidthCurve` (pairs ``alpha(t)`` with
    ``beta(t)``) or any table, whose pairs are the endpoints of the normal
    chords ``T(s, pi/2)``.
    """
    tols = {"tol": tol, "n": n, "n_period": n_period}
    wit, summary = [], {}
    if isinstance(obj, WidthCurve):
        lam = obj.spec.lam if lam is None else float(lam)
        t = np.linspace(-1, 1, n)
        A, Ad = obj.alpha_jet(t, 2)[:2]
        Bt, Bd = obj.beta_jet(t, 2)[:2]
        width = SPHERE.dist(A, Bt)
        wa, wb = SPHERE.log_dir(A, Bt), SPHERE.log_dir(Bt, A)
        unit = lambda v: v / np.linalg.norm(v, axis=-1, keepdims=True)  # noqa: E731
        ca = np.abs(np.sum(unit(wa) * unit(Ad), axis=-1))
        cb = np.abs(np.sum(unit(wb) * unit(Bd), axis=-1))
        orth = np.arcsin(np.clip(np.maximum(ca, cb), 0, 1))
        where = {"t": t}
        try:
            table = BilliardTable(obj.table())
        except GeoBilliardError as exc:
            table = None
            summary["table_error"] = str(exc)
    else:
        table = as_table(obj)
        if lam is None:
            raise ValueError("lam is required for a generic table")
        s = np.arange(n) * table.L / n
        _, th2, width = table.map(s, np.full(n, np.pi / 2))
        orth = np.abs(th2 - np.pi / 2)
        where = {"s": s}
    wdef = np.abs(width - lam)
    key = next(iter(where))
    summary.update({"width_defect": float(wdef.max()), "orthogonality_defect": float(orth.max())})
    if wdef.max() >= tol:
        j = int(np.argmax(wdef))
        wit.append(witness({"check": "width", key: where[key][j]}, {"width": width[j], "defect": wdef[j]}))
    if orth.max() >= tol:
        j = int(np.argmax(orth))
        wit.append(witness({"check": "orthogonality", key: where[key][j]}, {"defect_rad": orth[j]}))
    if table is None:
        wit.append(witness({"check": "period_two"}, {"error": summary["table_error"]}))
    else:
        sp, pdef = _period_two_defect(table, n_period, seed)
        summary["period_two_defect"] = float(pdef.max())
        if pdef.max() >= tol:
            j = int(np.argmax(pdef))
            wit.append(witness({"check": "period_two", "s": sp[j]}, {"defect": pdef[j]}))
    return CertificateReport("width", "fail" if wit else "pass", wit, tols, summary=summary)


__all__ = ["asymptotic_certificate", "find_flat_point", "measure_certificate", "AsymptoticResidual", "DiameterBound", "GlancingResult", "JacobiSignResult", "as_table",
           "asymptotic_residual", "diameter_bound_check", "glancing_scan", "mather_certificate",
           "mather_jacobi_sign", "polar_angle_rate", "table_diameter", "theta_samples",
           "twist_certificate", "width_curve_verify"]
