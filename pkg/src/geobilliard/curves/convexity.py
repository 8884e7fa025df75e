"""Convexity certification of table boundaries."""
import numpy as np
from scipy.spatial import cKDTree

from ..exceptions import ConvergenceError, DomainError, NeighborhoodError
from ..geometry.geodesics import exp_map, log_map
from ..reports import CertificateReport, witness


class BoundaryProjector:
    """Signed chart offset of points from a closed curve.

    The foot point is the chart-nearest curve point (KD-tree seed, Newton
    refinement); the sign is positive outside (the outward normal side).
    """

    def __init__(self, curve, per_piece=1024):
        self.curve = curve
        n = per_piece * curve.n_pieces
        self._t = np.arange(n) / n
        self._tree = cKDTree(curve.eval_t(self._t, 0)[0])

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        _, i = self._tree.query(x)
        t = self._t[i]
        for _ in range(8):
            d = self.curve.eval_t(t, 2)
            r = d[0] - x
            f = np.sum(r * d[1], axis=-1)
            fp = np.sum(d[1] * d[1], axis=-1) + np.sum(r * d[2], axis=-1)
            t = t - f / fp
        d = self.curve.eval_t(t, 1)
        tang = d[1] / np.linalg.norm(d[1], axis=-1, keepdims=True)
        n_out = np.c_[tang[:, 1], -tang[:, 0]]
        return np.sum((x - d[0]) * n_out, axis=-1), np.mod(t, 1.0)


def curvature_profile(curve, n=4096):
    """Curvature on an arclength grid plus both lateral limits at every breakpoint.

    Returns
    -------
    s, kappa : ndarray
    """
    s = np.arange(n) * curve.length / n
    k = curve.curvature(s)
    bps = curve.breakpoints
    if bps.size:
        km, kp = curve.lateral_curvature(bps)
        s = np.r_[s, bps, bps]
        k = np.r_[k, km, kp]
    return s, k


def chord_points(chart, xa, xb, fractions):
    """Chart points of the geodesic chords ``xa -> xb`` at the given fractions.

    Returns an array ``(n_pairs, n_fractions, 2)``.
    """
    W = log_map(chart, xa, xb)
    m, f = xa.shape[0], np.asarray(fractions)
    P = np.repeat(xa, f.size, axis=0)
    V = (W[:, None, :] * f[None, :, None]).reshape(-1, 2)
    return exp_map(chart, P, V).reshape(m, f.size, 2)


def convexity_certificate(curve, eps=None, n_chords=500, seed=0, n_kappa=4096, n_along=15,
                          inside_tol=1e-9):
    """Certify strict convexity of ``curve``.

    Passes iff the minimum curvature (lateral limits included) exceeds ``eps``
    and every sampled chord stays in the closed interior.

    Parameters
    ----------
    eps : float, optional
        Curvature threshold; defaults to ``1e-4 / L``.
    n_chords : int
        Number of random boundary pairs in the chord test.
    inside_tol : float
        Allowed outward chart offset (relative to the chart diameter of the curve).

    Raises
    ------
    NeighborhoodError
        If a chord geodesic cannot be computed.
    """
    L = curve.length
    eps = 1e-4 / L if eps is None else float(eps)
    tol = {"eps": eps, "inside_tol": inside_tol, "n_chords": n_chords, "n_kappa": n_kappa,
           "n_along": n_along}
    s, k = curvature_profile(curve, n_kappa)
    i_min = int(np.argmin(k))
    witnesses = []
    if k[i_min] <= eps:
        witnesses.append(witness({"s": s[i_min]}, {"kappa": k[i_min], "eps": eps}))

    rng = np.random.default_rng(seed)
    sa = rng.uniform(0, L, n_chords)
    sb = np.mod(sa + rng.uniform(0.01, 0.99, n_chords) * L, L)
    xa, xb = curve.point(sa), curve.point(sb)
    fr = (np.arange(n_along) + 1) / (n_along + 1)
    try:
        pts = chord_points(curve.chart, xa, xb, fr)
    except (ConvergenceError, DomainError) as exc:
        raise NeighborhoodError(f"chord geodesic could not be computed: {exc}") from exc
    poly = curve.polygon(512)
    scale = float(np.max(np.ptp(poly, axis=0)))
    off, _ = BoundaryProjector(curve)(pts.reshape(-1, 2))
    off = off.reshape(pts.shape[:2])
    worst = np.max(off, axis=1)
    bad = np.flatnonzero(worst > inside_tol * scale)
    for j in bad[np.argsort(-worst[bad])][:5]:
        witnesses.append(witness({"s1": sa[j], "s2": sb[j]},
                                 {"max_outward_offset": worst[j]}))
    summary = {"min_kappa": k[i_min], "argmin_s": s[i_min], "chords_exiting": int(bad.size),
               "max_chord_offset": float(np.max(worst))}
    return CertificateReport("convexity", "fail" if witnesses else "pass", witnesses, tol,
                             summary=summary)
