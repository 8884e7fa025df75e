"""Numerical detection of rotational invariant curves near the boundary.

An orbit is taken to lie on an invariant graph when three tests agree:
its points form a Lipschitz graph over ``s``, the map preserves their
cyclic order, and the rotation number has a small error bar over at least
``min_bounces`` bounces.
"""
from dataclasses import dataclass, field

import numpy as np

from ..billiard import LiftedOrbit, iterate_many, rotation_number


@dataclass
class GraphTest:
    lipschitz: float
    max_bin_spread: float
    single_valued: bool
    passed: bool


def graph_test(s, theta, L, lip_cap=10.0, bin_width=None, bin_tol=1e-9):
    """Is the point cloud ``(s mod L, theta)`` a Lipschitz graph over ``s``?

    The Lipschitz estimate is the largest slope between ``s``-consecutive
    points (cyclically); single-valuedness requires the ``theta`` spread in
    every ``s``-bin to stay below ``lip_cap * bin_width + bin_tol``.
    """
    s = np.mod(np.asarray(s, dtype=float), L)
    theta = np.asarray(theta, dtype=float)
    o = np.argsort(s, kind="stable")
    ss, tt = s[o], theta[o]
    ds = np.diff(np.r_[ss, ss[0] + L])
    dt = np.abs(np.diff(np.r_[tt, tt[0]]))
    tie = ds <= 1e-12 * L
    if np.any(dt[tie] > bin_tol):
        lip = np.inf
    else:
        lip = float(np.max(dt[~tie] / ds[~tie])) if np.any(~tie) else 0.0
    n = s.size
    bw = bin_width if bin_width is not None else 16 * L / max(n, 16)
    idx = np.floor(ss / bw).astype(int)
    starts = np.flatnonzero(np.r_[True, np.diff(idx) > 0])
    spread = np.maximum.reduceat(tt, starts) - np.minimum.reduceat(tt, starts)
    mx = float(spread.max())
    single = mx <= lip_cap * bw + bin_tol
    return GraphTest(lip, mx, bool(single), bool(single and lip <= lip_cap))


def ordering_violations(s_lift, L, tie_tol=1e-10):
    """Number of breaks of cyclic order between consecutive orbit points and their images.

    On an invariant circle the map acts as an orientation-preserving circle
    homeomorphism, so sorting ``s_n`` sorts ``s_{n+1}`` up to one cyclic wrap.
    """
    s = np.mod(np.asarray(s_lift, dtype=float), L)
    if s.size < 3:
        return 0
    o = np.argsort(s[:-1], kind="stable")
    img = s[1:][o]
    d = np.diff(np.r_[img, img[0]])
    return max(int(np.sum(d < -tie_tol * L)) - 1, 0)


@dataclass
class OrbitVerdict:
    theta0: float
    s0: float
    status: str  # "graph", "no_graph" or "inconclusive"
    rotation: float
    rotation_error: float
    lipschitz: float
    ordering_violations: int
    min_theta: float
    reason: str = ""


@dataclass
class DetectedGraph:
    rotation: float
    rotation_error: float
    lipschitz: float
    ordering_violations: int
    s: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)


@dataclass
class CausticScanResult:
    """Outcome of :func:`caustic_scan`.

    ``detected_graphs`` lists the orbits passing all three tests;
    ``orbits`` holds one verdict per initial condition.
    """

    theta_band: tuple
    detected_graphs: list
    orbits: list
    criteria: dict
    cloud: tuple = field(default=(np.empty(0), np.empty(0)), repr=False)  # subsampled (s, theta) for plots

    @property
    def n_detected(self):
        return len(self.detected_graphs)


def classify_orbit(S, TH, L, theta_min, lip_cap=10.0, rot_tol=1e-4, min_bounces=10_000):
    """Classify one orbit given its lifted arclengths and angles."""
    orb = LiftedOrbit(S, TH, np.zeros(S.size - 1), L)
    rot = rotation_number(orb) if S.size > 1 else None
    g = graph_test(S, TH, L, lip_cap)
    viol = ordering_violations(S, L)
    base = dict(theta0=float(TH[0]), s0=float(S[0]), rotation=rot.value, rotation_error=rot.error,
                lipschitz=g.lipschitz, ordering_violations=viol, min_theta=float(TH.min()))
    if np.min(np.minimum(TH, np.pi - TH)) <= theta_min:
        return OrbitVerdict(status="inconclusive", reason="grazing cutoff reached", **base)
    if S.size - 1 < min_bounces:
        return OrbitVerdict(status="inconclusive", reason=f"fewer than {min_bounces} bounces", **base)
    ok = g.passed and viol == 0 and rot.error < rot_tol
    return OrbitVerdict(status="graph" if ok else "no_graph", **base)


def caustic_scan(table, theta_max=0.2, n_orbits=200, n_bounces=10_000, s0=0.0, lip_cap=10.0,
                 rot_tol=1e-4, min_bounces=10_000, chunk=1000):
    """Scan orbits started at ``theta0 in (0, theta_max]`` for invariant graphs.

    Parameters
    ----------
    table : BilliardTable
    theta_max : float
        Upper end of the initial-angle band.
    n_orbits, n_bounces : int
    s0 : float
        Common initial arclength.
    lip_cap, rot_tol : float
        Lipschitz bound of the graph test and rotation-number error bound.

    Returns
    -------
    CausticScanResult
    """
    from .certificates import as_table
    table = as_table(table)
    L = table.L
    th0 = theta_max * (np.arange(n_orbits) + 1) / n_orbits
    verdicts, graphs, cs, ct = [], [], [], []
    stride = max(1, (n_bounces + 1) * n_orbits // 20000)
    for a in range(0, n_orbits, chunk):
        S, TH, _ = iterate_many(table, np.full(th0[a:a + chunk].shape, float(s0)), th0[a:a + chunk],
                                n_bounces)
        cs.append(np.mod(S[::stride], L).ravel())
        ct.append(TH[::stride].ravel())
        for j in range(S.shape[1]):
            v = classify_orbit(S[:, j], TH[:, j], L, table.theta_min, lip_cap, rot_tol, min_bounces)
            verdicts.append(v)
            if v.status == "graph":
                graphs.append(DetectedGraph(v.rotation, v.rotation_error, v.lipschitz,
                                            v.ordering_violations, np.mod(S[:, j], L), TH[:, j].copy()))
    criteria = {"lip_cap": lip_cap, "rot_tol": rot_tol, "min_bounces": min_bounces,
                "n_orbits": n_orbits, "n_bounces": n_bounces}
    return CausticScanResult((0.0, float(theta_max)), graphs, verdicts, criteria,
                             (np.concatenate(cs), np.concatenate(ct)))
