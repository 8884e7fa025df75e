"""Command-line front end.

Usage::

    geobilliard orbit --config table.json --out out --theta0 1.047 --n 3
    geobilliard phase-portrait --config table.json --out out --seed 7
    geobilliard verify mather --config width.json --out out

Exit codes: 0 pass (or a successful orbit/portrait run), 1 fail,
2 configuration or runtime error, 3 inconclusive.  On exit code 2 a JSON
error document goes to stderr and to ``<out>/error.json``.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis.caustics import caustic_scan
from .analysis.certificates import (asymptotic_certificate, find_flat_point, mather_certificate,
                                    measure_certificate, twist_certificate, width_curve_verify)
from .analysis.hubacher import hubacher_certificate
from .billiard import PhasePoint, iterate, iterate_many, rotation_number
from .config import FORMATS, ConfigError, RunConfig, build_table
from .curves.convexity import convexity_certificate
from .curves.width import WidthCurve
from .exceptions import GeoBilliardError
from .io import (chord_traces, curvature_csv, json_text, orbit_csv, phase_csv, phase_svg, table_svg,
                 witness_csv, write_text)
from .reports import CertificateReport, witness

REPORT_SCHEMA_VERSION = 1
CHECKS = ("twist", "asymptotic", "hubacher", "mather", "width", "measure", "convexity", "caustic")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"command line: {message}")


def _formats(text):
    fm = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fm if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown output formats {bad}")
    return fm


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise ConfigError(f"seed must be an integer (got {text!r})") from exc
    if not 0 <= v < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    p = _Parser(prog="geobilliard", description="Billiards on convex tables in Riemannian surface charts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides out_dir)")
    common.add_argument("--format", type=_formats, help="comma-separated subset of csv,json,svg")
    common.add_argument("--seed", type=_seed, help="unsigned 64-bit seed (overrides seed)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("orbit", parents=[common], help="iterate one orbit")
    o.add_argument("--s0", type=float)
    o.add_argument("--theta0", type=float)
    o.add_argument("--n", type=int, help="number of bounces")

    pp = sub.add_parser("phase-portrait", parents=[common], help="orbits seeded on an (s, theta) grid")
    pp.add_argument("--n-orbits", type=int)
    pp.add_argument("--n-bounces", type=int)

    v = sub.add_parser("verify", parents=[common], help="run a certificate")
    v.add_argument("check", choices=CHECKS)
    return p


# --- commands ------------------------------------------------------------------------
def _param(args, cfg, name, default):
    val = getattr(args, name, None)
    return cfg.params.get(name, default) if val is None else val


def cmd_orbit(cfg, args=None):
    """Iterate one orbit and write ``orbit.csv``, ``orbit.svg`` and ``orbit.json``."""
    table, _ = build_table(cfg)
    s0 = float(_param(args, cfg, "s0", 0.0))
    th0 = float(_param(args, cfg, "theta0", np.pi / 3))
    n = int(_param(args, cfg, "n", 100))
    if n < 1:
        raise ConfigError("n must be at least 1")
    orbit = iterate(table, PhasePoint(s0, th0), n)
    files = []
    if "csv" in cfg.formats:
        files.append(write_text(os.path.join(cfg.out_dir, "orbit.csv"), orbit_csv(orbit)))
        files.append(write_text(os.path.join(cfg.out_dir, "curvature.csv"), curvature_csv(table.curve)))
    if "svg" in cfg.formats:
        n_draw = min(n, int(cfg.params.get("max_drawn_chords", 200)))
        trimmed = type(orbit)(orbit.s[:n_draw + 1], orbit.theta[:n_draw + 1], orbit.H[:n_draw], orbit.L)
        traces = chord_traces(table, trimmed, int(cfg.params.get("trace_samples", 64)))
        files.append(write_text(os.path.join(cfg.out_dir, "orbit.svg"), table_svg(table.curve, traces)))
    summary = {"schema": REPORT_SCHEMA_VERSION, "command": "orbit", "L": table.L, "s0": s0, "theta0": th0,
               "n": n, "s_lifted_final": float(orbit.s[-1]), "theta_final": float(orbit.theta[-1]),
               "lift_increment": float(orbit.s[-1] - orbit.s[0]), "config": cfg.echo()}
    if n >= 2:
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rot = rotation_number(orbit)
        summary["rotation_number"] = {"value": rot.value, "error": rot.error}
    if "json" in cfg.formats:
        files.append(write_text(os.path.join(cfg.out_dir, "orbit.json"), json_text(summary)))
    return 0, summary, files


def _portrait_seeds(cfg, n_orbits, L):
    th_lo, th_hi = cfg.params.get("theta_range", (0.05, np.pi / 2))
    n_s = int(cfg.params.get("n_s", 1))
    n_th = max(int(np.ceil(n_orbits / n_s)), 1)
    jitter = float(cfg.params.get("jitter", 0.0))
    rng = np.random.default_rng(cfg.seed)
    s = (np.arange(n_s) + 0.5) * L / n_s
    th = np.linspace(th_lo, th_hi, n_th)
    S, TH = (a.ravel()[:n_orbits] for a in np.meshgrid(s, th, indexing="ij"))
    if jitter > 0:
        S = S + jitter * (L / n_s) * rng.uniform(-0.5, 0.5, S.size)
        dth = (th_hi - th_lo) / max(n_th - 1, 1)
        TH = np.clip(TH + jitter * dth * rng.uniform(-0.5, 0.5, TH.size), th_lo, th_hi)
    return np.mod(S, L), TH


def cmd_phase_portrait(cfg, args=None):
    """Orbits seeded on an ``(s, theta)`` grid; writes ``phase.csv``, ``phase.svg``, ``phase.json``."""
    table, _ = build_table(cfg)
    n_orbits = int(_param(args, cfg, "n_orbits", 20))
    n_bounces = int(_param(args, cfg, "n_bounces", 500))
    if n_orbits < 1 or n_bounces < 1:
        raise ConfigError("n_orbits and n_bounces must be positive")
    s0, th0 = _portrait_seeds(cfg, n_orbits, table.L)
    failures = []
    try:
        S, TH, _ = iterate_many(table, s0, th0, n_bounces)
        cols = list(range(n_orbits))
    except GeoBilliardError:
        # redo orbit by orbit so that one bad seed does not sink the run
        keep_s, keep_t, cols = [], [], []
        for j in range(n_orbits):
            try:
                Sj, Tj, _ = iterate_many(table, s0[j], th0[j], n_bounces)
            except GeoBilliardError as exc:
                failures.append({"orbit": j, "s0": s0[j], "theta0": th0[j], "error": type(exc).__name__,
                                 "message": str(exc)})
                continue
            keep_s.append(Sj[:, 0])
            keep_t.append(Tj[:, 0])
            cols.append(j)
        S = np.stack(keep_s, axis=1) if keep_s else np.empty((n_bounces + 1, 0))
        TH = np.stack(keep_t, axis=1) if keep_t else np.empty((n_bounces + 1, 0))
    files = []
    if "csv" in cfg.formats:
        text = phase_csv(S, TH, table.L, cols)
        files.append(write_text(os.path.join(cfg.out_dir, "phase.csv"), text))
    if "svg" in cfg.formats:
        files.append(write_text(os.path.join(cfg.out_dir, "phase.svg"),
                                phase_svg(S, TH, table.L, seed=cfg.seed)))
    summary = {"schema": REPORT_SCHEMA_VERSION, "command": "phase-portrait", "L": table.L,
               "n_orbits": n_orbits, "n_bounces": n_bounces, "seeds": {"s0": s0, "theta0": th0},
               "failures": failures, "config": cfg.echo()}
    if "json" in cfg.formats:
        files.append(write_text(os.path.join(cfg.out_dir, "phase.json"), json_text(summary)))
    return 0, summary, files


def _caustic_report(table, cfg, tol):
    p = cfg.params
    res = caustic_scan(table, theta_max=float(p.get("theta_max", 0.2)), n_orbits=int(p.get("n_orbits", 200)),
                       n_bounces=int(p.get("n_bounces", 10_000)), s0=float(p.get("s0", 0.0)),
                       lip_cap=tol["caustic_lipschitz"], rot_tol=tol["caustic_rotation"],
                       min_bounces=int(p.get("min_bounces", 10_000)))
    expect = bool(p.get("expect_graphs", False))
    tols = dict(res.criteria, theta_max=res.theta_band[1], expect_graphs=expect)
    counts = {k: sum(v.status == k for v in res.orbits) for k in ("graph", "no_graph", "inconclusive")}
    summary = {"n_detected": res.n_detected, "counts": counts,
               "graphs": [{"rotation": g.rotation, "rotation_error": g.rotation_error,
                           "lipschitz": g.lipschitz} for g in res.detected_graphs],
               "orbits": [vars(v) for v in res.orbits]}
    if expect:
        if res.n_detected:
            rep = CertificateReport("caustic", "pass", [], tols, summary=summary)
        elif counts["inconclusive"]:
            rep = CertificateReport("caustic", "inconclusive", [], tols, "no graph detected; some orbits undecided",
                                    summary)
        else:
            wit = [witness({"theta_band": res.theta_band}, {"n_detected": 0})]
            rep = CertificateReport("caustic", "fail", wit, tols, summary=summary)
    elif res.n_detected:
        wit = [witness({"theta0": v.theta0, "s0": v.s0}, {"rotation": v.rotation, "lipschitz": v.lipschitz})
               for v in res.orbits if v.status == "graph"]
        rep = CertificateReport("caustic", "fail", wit, tols, summary=summary)
    elif counts["inconclusive"]:
        rep = CertificateReport("caustic", "inconclusive", [], tols, "some orbits undecided", summary)
    else:
        rep = CertificateReport("caustic", "pass", [], tols, summary=summary)
    return rep, res


def run_check(which, table, src, cfg, tol):
    """Dispatch one certificate; returns ``(report, extra)``."""
    p = cfg.params
    if which == "twist":
        return twist_certificate(table, int(p.get("grid_n", 20)), float(p.get("delta", 0.05)),
                                 tol["twist_violation"]), None
    if which == "asymptotic":
        return asymptotic_certificate(table, p.get("s_list"), tuple(p.get("theta_list", (1e-1, 1e-2, 1e-3, 1e-4))),
                                      tol["asymptotic_r1"]), None
    if which == "hubacher":
        return hubacher_certificate(table, p.get("s_star"), tuple(p.get("a_minus_list", (0.08, 0.04, 0.02, 0.01))),
                                    tol["hubacher_rel"]), None
    if which == "mather":
        s1 = p.get("s1")
        s1 = find_flat_point(table.curve) if s1 is None else float(s1)
        return mather_certificate(table, s1, int(p.get("n_theta", 180)), float(p.get("delta", 0.05)),
                                  tol["mather_B"], tol["kappa_zero"]), None
    if which == "width":
        obj = src if isinstance(src, WidthCurve) else table
        lam = p.get("lam")
        if obj is table and lam is None:
            raise ConfigError("verify width on a generic table needs params.lam")
        return width_curve_verify(obj, lam, int(p.get("n", 2001)), int(p.get("n_period", 50)), tol["width"],
                                  cfg.seed), None
    if which == "measure":
        return measure_certificate(table, int(p.get("n", 300)), float(p.get("delta", 1e-3)), tol["measure"],
                                   cfg.seed), None
    if which == "convexity":
        eps = p.get("eps")
        return convexity_certificate(table.curve, None if eps is None else float(eps),
                                     int(p.get("n_chords", 500)), cfg.seed), None
    if which == "caustic":
        return _caustic_report(table, cfg, tol)
    raise ConfigError(f"unknown check {which!r}")


def cmd_verify(cfg, which, environ=None):
    """Run a certificate and write ``verify_<which>.json`` (always) plus witnesses/SVG."""
    tol = cfg.tolerances(environ)
    table, src = build_table(cfg)
    rep, extra = run_check(which, table, src, cfg, tol)
    doc = rep.to_dict()
    doc.update({"schema": REPORT_SCHEMA_VERSION, "command": f"verify {which}", "exit_code": rep.exit_code,
                "config_tolerances": tol, "config": cfg.echo()})
    files = [write_text(os.path.join(cfg.out_dir, f"verify_{which}.json"), json_text(doc))]
    if "csv" in cfg.formats:
        text = witness_csv(rep)
        if text is not None:
            files.append(write_text(os.path.join(cfg.out_dir, f"verify_{which}_witnesses.csv"), text))
    if which == "caustic" and "svg" in cfg.formats and extra is not None:
        hl = [(g.s, g.theta) for g in extra.detected_graphs]
        n_b = extra.criteria["n_bounces"]
        svg = phase_svg(*extra.cloud, table.L, highlight=hl, seed=cfg.seed,
                        title=f"caustic scan ({extra.n_detected} graphs, {n_b} bounces)")
        files.append(write_text(os.path.join(cfg.out_dir, "verify_caustic.svg"), svg))
    return rep.exit_code, doc, files


# --- entry point ---------------------------------------------------------------------
def _error_doc(exc, command):
    return {"schema": REPORT_SCHEMA_VERSION, "command": command, "exit_code": 2,
            "error": type(exc).__name__, "message": str(exc)}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    out_dir, command = None, " ".join(argv[:2])
    try:
        args = build_parser().parse_args(argv)
        command = args.command + (f" {args.check}" if args.command == "verify" else "")
        out_dir = args.out
        try:
            cfg = RunConfig.load(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if args.out is not None:
            cfg.out_dir = args.out
        if args.format is not None:
            cfg.formats = args.format
        if args.seed is not None:
            cfg.seed = args.seed
        out_dir = cfg.out_dir
        if args.command == "orbit":
            code, _, files = cmd_orbit(cfg, args)
        elif args.command == "phase-portrait":
            code, _, files = cmd_phase_portrait(cfg, args)
        else:
            code, _, files = cmd_verify(cfg, args.check)
        for f in files:
            print(f)
        return code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (GeoBilliardError, ValueError, OSError, KeyError, TypeError) as exc:
        doc = _error_doc(exc, command)
        sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
        if out_dir:
            try:
                write_text(os.path.join(out_dir, "error.json"), json_text(doc))
            except OSError:
                pass
        return 2


if __name__ == "__main__":
    sys.exit(main())
