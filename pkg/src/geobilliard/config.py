"""Run configuration: JSON (de)serialization and table construction from specs.

A configuration file looks like::

    {"surface": {"kind": "sphere_cap", "projection": "stereographic", "margin": 0.05},
     "curve": {"kind": "fourier", "preset": "perturbed_circle", "radius": 0.5,
               "perturbations": [[3, 0.02, 0.0]]},
     "params": {"n_orbits": 20, "tolerances": {"mather_B": 1e-8}},
     "out_dir": "out", "formats": ["csv", "json", "svg"], "seed": 0}
"""
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .curves.base import BoundaryCurve
from .curves.families import (fourier_curve, limacon_oval, make_geodesic_circle, make_support_oval_flat,
                              make_two_arc_table, perturbed_circle)
from .curves.width import WidthCurve, WidthCurveSpec, construct_width_curve
from .exceptions import GeoBilliardError
from .geometry.charts import (ConformalPolyChart, Disc, EuclideanChart, Plane, PoincareDiscChart, Rect,
                              SpherePolarChart, StereographicSphereChart)

SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "svg")
ENV_PREFIX = "GEOBILLIARD_TOL_"

DEFAULT_TOLERANCES = {
    "twist_violation": 1e-8,
    "asymptotic_r1": 1e-2,
    "hubacher_rel": 0.02,
    "mather_B": 1e-8,
    "kappa_zero": 1e-6,
    "width": 1e-6,
    "measure": 1e-6,
    "caustic_rotation": 1e-4,
    "caustic_lipschitz": 10.0,
}


class ConfigError(GeoBilliardError, ValueError):
    """Invalid or incomplete configuration."""


@dataclass
class RunConfig:
    """Everything a CLI run needs.

    Attributes
    ----------
    surface, curve : dict
        Specs understood by :func:`build_chart` and :func:`build_curve`.
    params : dict
        Command parameters; ``params["tolerances"]`` overrides
        :data:`DEFAULT_TOLERANCES`.
    out_dir : str
    formats : tuple of str
        Subset of ``("csv", "json", "svg")``.
    seed : int
    """

    surface: dict
    curve: dict
    params: dict = field(default_factory=dict)
    out_dir: str = "out"
    formats: tuple = FORMATS
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.surface, dict) or "kind" not in self.surface:
            raise ConfigError("surface spec needs a 'kind'")
        if not isinstance(self.curve, dict) or "kind" not in self.curve:
            raise ConfigError("curve spec needs a 'kind'")
        self.formats = tuple(self.formats)
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output formats {bad}")
        self.seed = int(self.seed)
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for k, v in self.params.get("tolerances", {}).items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k!r} must be positive (got {v!r})")

    def tolerances(self, environ=None):
        """Defaults, overridden by ``params['tolerances']``, then by ``GEOBILLIARD_TOL_<NAME>``."""
        env = os.environ if environ is None else environ
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(self.params.get("tolerances", {}))
        for key, val in env.items():
            if key.startswith(ENV_PREFIX):
                name = key[len(ENV_PREFIX):]
                match = next((k for k in tol if k.lower() == name.lower()), name.lower())
                try:
                    v = float(val)
                except ValueError as exc:
                    raise ConfigError(f"{key} is not a number: {val!r}") from exc
                if not v > 0:
                    raise ConfigError(f"{key} must be positive")
                tol[match] = v
        return tol

    def to_dict(self):
        return {"schema": SCHEMA_VERSION, "surface": self.surface, "curve": self.curve, "params": self.params,
                "out_dir": self.out_dir, "formats": list(self.formats), "seed": self.seed}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def echo(self):
        """Config as recorded in outputs; the output location is left out so that reruns elsewhere match."""
        d = self.to_dict()
        d.pop("out_dir")
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        if d.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {d.get('schema')!r}")
        missing = [k for k in ("surface", "curve") if k not in d]
        if missing:
            raise ConfigError(f"missing keys {missing}")
        unknown = set(d) - {"schema", "surface", "curve", "params", "out_dir", "formats", "seed"}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
        return cls(d["surface"], d["curve"], d.get("params", {}), d.get("out_dir", "out"),
                   tuple(d.get("formats", FORMATS)), d.get("seed", 0))

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


# --- builders -----------------------------------------------------------------------
def _domain(spec):
    if spec is None:
        return None
    if "disc" in spec:
        cx, cy, r = spec["disc"]
        return Disc(r, (cx, cy))
    if "rect" in spec:
        a, b, c, d = spec["rect"]
        return Rect((a, b), (c, d))
    if "plane" in spec:
        return Plane()
    raise ConfigError(f"unknown domain spec {spec!r}")


def build_chart(spec):
    """Chart from a surface spec (kinds ``euclidean``, ``sphere_cap``, ``poincare``, ``conformal_poly``)."""
    kind = spec.get("kind")
    try:
        if kind == "euclidean":
            return EuclideanChart()
        if kind == "sphere_cap":
            proj = spec.get("projection", "stereographic")
            margin = float(spec.get("margin", 0.05))
            if proj == "stereographic":
                return StereographicSphereChart(margin)
            if proj == "polar":
                return SpherePolarChart(margin)
            raise ConfigError(f"unknown sphere projection {proj!r}")
        if kind == "poincare":
            return PoincareDiscChart(float(spec.get("margin", 1e-3)))
        if kind == "conformal_poly":
            return ConformalPolyChart(spec["coeffs"], _domain(spec.get("domain")),
                                      float(spec.get("normal_radius", 1.0)))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad surface spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown surface kind {kind!r}")


def build_curve(spec, chart):
    """Boundary (or :class:`WidthCurve` for ``width_sphere``) from a curve spec."""
    kind = spec.get("kind")
    try:
        if kind == "fourier":
            preset = spec.get("preset")
            if preset == "perturbed_circle":
                return perturbed_circle(chart, float(spec.get("radius", 1.0)), spec.get("perturbations", []),
                                        tuple(spec.get("center", (0.0, 0.0))))
            if preset == "limacon":
                return limacon_oval(chart, float(spec.get("scale", 1.0)), tuple(spec.get("flat_point", (0.0, 0.0))),
                                    float(spec.get("angle", 0.0)))
            if preset is not None:
                raise ConfigError(f"unknown fourier preset {preset!r}")
            return fourier_curve(chart, np.asarray(spec["cos"], float), np.asarray(spec["sin"], float))
        if kind == "geodesic_circle":
            return make_geodesic_circle(chart, np.asarray(spec.get("center", (0.0, 0.0)), float),
                                        float(spec["radius"]))
        if kind == "two_arc":
            return make_two_arc_table(chart, float(spec["kappa_minus"]), float(spec["kappa_plus"]),
                                      float(spec.get("psi", np.pi / 4)))
        if kind == "support_oval":
            if not isinstance(chart, EuclideanChart):
                raise ConfigError("support_oval tables live in the euclidean chart")
            return make_support_oval_flat(spec["rho"])
        if kind == "width_sphere":
            if not isinstance(chart, StereographicSphereChart):
                raise ConfigError("width_sphere tables need a stereographic sphere_cap surface")
            if spec.get("a") is not None and spec.get("b") is not None:
                ws = WidthCurveSpec(float(spec.get("phi0", 1.40)), float(spec.get("phi1", 0.90)),
                                    spec.get("p4_variant", "derived"), np.asarray(spec["a"]), np.asarray(spec["b"]))
                return WidthCurve(ws, chart=chart)
            w = construct_width_curve(float(spec.get("phi0", 1.40)), float(spec.get("phi1", 0.90)),
                                      spec.get("p4_variant", "derived"))
            return WidthCurve(w.spec, chart=chart)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad curve spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown curve kind {kind!r}")


def build_table(config):
    """``(BilliardTable, source)`` where ``source`` is the boundary curve or the width curve."""
    from .billiard import BilliardTable
    chart = build_chart(config.surface)
    src = build_curve(config.curve, chart)
    curve = src.table() if isinstance(src, WidthCurve) else src
    if not isinstance(curve, BoundaryCurve):
        raise ConfigError("curve spec did not produce a boundary")
    engine = config.params.get("engine", "auto")
    return BilliardTable(curve, engine=engine), src
