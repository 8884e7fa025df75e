"""Verdict containers shared by the certificates."""
import json
from dataclasses import asdict, dataclass, field

import numpy as np

VERDICTS = ("pass", "fail", "inconclusive")
EXIT_CODES = {"pass": 0, "fail": 1, "inconclusive": 3}


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class CertificateReport:
    """Outcome of a numerical check.

    Attributes
    ----------
    name : str
    verdict : {"pass", "fail", "inconclusive"}
    witnesses : list of dict
        Each entry has ``inputs`` and ``values``; failing reports carry at least one.
    tolerances : dict
        Every tolerance the check used.
    reason : str, optional
        Why an inconclusive verdict could not be decided.
    summary : dict
        Aggregate numbers (minima, maxima, counts).
    """

    name: str
    verdict: str
    witnesses: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    reason: str = ""
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "fail" and not self.witnesses:
            raise ValueError("a failing report needs at least one witness")
        if self.verdict == "inconclusive" and not self.reason:
            raise ValueError("an inconclusive report needs a reason")

    @property
    def passed(self):
        return self.verdict == "pass"

    @property
    def exit_code(self):
        return EXIT_CODES[self.verdict]

    def to_dict(self):
        return to_jsonable(asdict(self))

    def to_json(self, **kw):
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)


def witness(inputs, values):
    return {"inputs": to_jsonable(inputs), "values": to_jsonable(values)}
