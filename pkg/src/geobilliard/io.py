"""Deterministic CSV, JSON and SVG writers.

CSV layouts (schema version 1, header row always present):

* orbit: ``n, s, theta, s_lifted, H_n`` (``H_n`` is the length of the chord
  leaving bounce ``n``; empty on the last row)
* phase portrait: ``orbit, n, s, theta``
* curvature profile: ``s, kappa``
* witnesses: one column per witness input/value key

Floats are written with ``repr`` so that identical inputs give byte-identical
files.
"""
import csv
import io
import json
import os

import numpy as np

from .reports import to_jsonable

CSV_SCHEMA_VERSION = 1
ORBIT_COLUMNS = ("n", "s", "theta", "s_lifted", "H_n")
PHASE_COLUMNS = ("orbit", "n", "s", "theta")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def csv_text(columns, rows):
    """Render rows (sequences aligned with ``columns``) as CSV with ``\\n`` line ends."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_text(path, text):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def json_text(obj):
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj):
    return write_text(path, json_text(obj))


def orbit_rows(orbit):
    """Rows ``(n, s mod L, theta, s_lifted, H_n)`` of a :class:`LiftedOrbit`."""
    s = np.asarray(orbit.s)
    out = []
    for n in range(s.size):
        h = float(orbit.H[n]) if n < len(orbit.H) else None
        out.append((n, float(np.mod(s[n], orbit.L)), float(orbit.theta[n]), float(s[n]), h))
    return out


def orbit_csv(orbit):
    return csv_text(ORBIT_COLUMNS, orbit_rows(orbit))


def phase_csv(S, TH, L, ids=None):
    """Point cloud of many orbits (arrays of shape ``(n + 1, m)``); ``ids`` labels the columns."""
    S, TH = np.atleast_2d(S), np.atleast_2d(TH)
    ids = range(S.shape[1]) if ids is None else ids
    rows = [(i, n, float(np.mod(S[n, j], L)), float(TH[n, j]))
            for j, i in enumerate(ids) for n in range(S.shape[0])]
    return csv_text(PHASE_COLUMNS, rows)


def curvature_csv(curve, n=1024):
    from .curves.convexity import curvature_profile
    s, k = curvature_profile(curve, n)
    o = np.argsort(s, kind="stable")
    return csv_text(("s", "kappa"), zip(s[o], k[o]))


def witness_csv(report):
    """Flatten the witnesses of a :class:`CertificateReport` (``None`` if there are none)."""
    if not report.witnesses:
        return None
    cols = []
    for w in report.witnesses:
        for part in ("inputs", "values"):
            for k in w[part]:
                if f"{part}.{k}" not in cols:
                    cols.append(f"{part}.{k}")
    rows = []
    for w in report.witnesses:
        flat = {f"{p}.{k}": v for p in ("inputs", "values") for k, v in w[p].items()}
        rows.append([flat.get(c) for c in cols])
    return csv_text(cols, rows)


# --- SVG ------------------------------------------------------------------------
_SIZE = 600
_PAD = 20


def _coord(v):
    return f"{v:.3f}"


def _polyline(pts, stroke, width=1.0, closed=False, opacity=1.0):
    tag = "polygon" if closed else "polyline"
    p = " ".join(f"{_coord(x)},{_coord(y)}" for x, y in pts)
    return (f'<{tag} points="{p}" fill="none" stroke="{stroke}" stroke-width="{width}" '
            f'stroke-opacity="{opacity}"/>')


def _header(w, h, title):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
            f"<title>{title}</title>", f'<rect width="{w}" height="{h}" fill="white"/>']


def _fit(points):
    """Affine map from chart coordinates to the square canvas (y axis up)."""
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    sc = (_SIZE - 2 * _PAD) / span
    mid = 0.5 * (lo + hi)

    def f(p):
        p = np.atleast_2d(p)
        return np.c_[_SIZE / 2 + sc * (p[:, 0] - mid[0]), _SIZE / 2 - sc * (p[:, 1] - mid[1])]
    return f


def table_svg(curve, traces=(), title="billiard orbit", n_boundary=512):
    """Boundary in chart coordinates plus chord polylines.

    Parameters
    ----------
    traces : iterable of ndarray
        Chart-space polylines, one per chord (at least 64 samples each when
        produced by :func:`chord_traces`).
    """
    poly = curve.polygon(n_boundary)
    traces = [np.asarray(t) for t in traces]
    allp = np.vstack([poly] + traces) if traces else poly
    f = _fit(allp)
    out = _header(_SIZE, _SIZE, title)
    out.append(_polyline(f(poly), "black", 1.5, closed=True))
    for t in traces:
        out.append(_polyline(f(t), "#1f77b4", 0.7, opacity=0.8))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def chord_traces(table, orbit, n=64):
    """Chart-space polylines (``n`` samples) of every chord of ``orbit``."""
    from .billiard import _chord_trace
    out = []
    for k in range(orbit.n_bounces):
        if orbit.H[k] > 0:
            out.append(_chord_trace(table, float(np.mod(orbit.s[k], orbit.L)), float(orbit.theta[k]),
                                    float(orbit.H[k]), n))
    return out


def phase_svg(s, theta, L, highlight=(), max_points=20000, seed=0, title="phase portrait"):
    """Scatter of ``(s, theta)`` on ``[0, L) x [0, pi]``.

    Large clouds are subsampled reproducibly to ``max_points``;
    ``highlight`` is a list of ``(s, theta)`` arrays drawn on top in red
    (detected invariant graphs).
    """
    s = np.mod(np.ravel(s), L)
    theta = np.ravel(theta)
    if s.size > max_points:
        idx = np.sort(np.random.default_rng(seed).choice(s.size, max_points, replace=False))
        s, theta = s[idx], theta[idx]
    W, H = 800, 400

    def xy(ss, tt):
        return _PAD + (W - 2 * _PAD) * ss / L, H - _PAD - (H - 2 * _PAD) * tt / np.pi

    out = _header(W, H, title)
    out.append(f'<rect x="{_PAD}" y="{_PAD}" width="{W - 2 * _PAD}" height="{H - 2 * _PAD}" '
               'fill="none" stroke="black"/>')
    x, y = xy(s, theta)
    out.append('<g fill="#333">')
    out.extend(f'<circle cx="{_coord(a)}" cy="{_coord(b)}" r="0.6"/>' for a, b in zip(x, y))
    out.append("</g>")
    for hs, ht in highlight:
        hs = np.mod(np.ravel(hs), L)
        ht = np.ravel(ht)
        if hs.size > 4000:
            k = np.linspace(0, hs.size - 1, 4000).astype(int)
            hs, ht = hs[k], ht[k]
        x, y = xy(hs, ht)
        out.append('<g fill="red">')
        out.extend(f'<circle cx="{_coord(a)}" cy="{_coord(b)}" r="1.0"/>' for a, b in zip(x, y))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
