import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geobilliard.cli import main
from geobilliard.config import DEFAULT_TOLERANCES, ConfigError, RunConfig, build_table

CIRCLE = {"surface": {"kind": "euclidean"}, "curve": {"kind": "geodesic_circle", "radius": 1.0}}
WIDTH = {"surface": {"kind": "sphere_cap", "projection": "stereographic"}, "curve": {"kind": "width_sphere"}}
TWO_ARC = {"surface": {"kind": "euclidean"}, "curve": {"kind": "two_arc", "kappa_minus": 4, "kappa_plus": 1}}


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- RunConfig ---------------------------------------------------------------------------
surfaces = st.sampled_from([{"kind": "euclidean"}, {"kind": "poincare", "margin": 0.001},
                            {"kind": "sphere_cap", "projection": "polar", "margin": 0.05}])
tol_dicts = st.dictionaries(st.sampled_from(sorted(DEFAULT_TOLERANCES)),
                            st.floats(1e-12, 1.0, allow_nan=False), max_size=4)


@given(surface=surfaces, tols=tol_dicts, seed=st.integers(0, 2**64 - 1),
       formats=st.lists(st.sampled_from(["csv", "json", "svg"]), unique=True, min_size=1))
def test_config_round_trip(surface, tols, seed, formats):
    cfg = RunConfig(surface, {"kind": "geodesic_circle", "radius": 0.5}, {"tolerances": tols, "n": 3},
                    "out", tuple(formats), seed)
    back = RunConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.to_json() == cfg.to_json()


@pytest.mark.parametrize("doc", [
    {"surface": {"kind": "euclidean"}},
    {"surface": {}, "curve": {"kind": "two_arc"}},
    {**CIRCLE, "formats": ["png"]},
    {**CIRCLE, "seed": -1},
    {**CIRCLE, "params": {"tolerances": {"mather_B": 0.0}}},
    {**CIRCLE, "bogus": 1},
])
def test_config_validation(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_env_overrides():
    cfg = RunConfig.from_dict({**CIRCLE, "params": {"tolerances": {"width": 1e-7}}})
    tol = cfg.tolerances({"GEOBILLIARD_TOL_MATHER_B": "1e-9"})
    assert tol["mather_B"] == 1e-9 and tol["width"] == 1e-7
    with pytest.raises(ConfigError):
        cfg.tolerances({"GEOBILLIARD_TOL_WIDTH": "abc"})


def test_build_table_from_width_spec():
    tab, src = build_table(RunConfig.from_dict(WIDTH))
    assert tab.L == pytest.approx(src.table().L)


@pytest.mark.parametrize("doc", [
    {"surface": {"kind": "torus"}, "curve": {"kind": "two_arc"}},
    {"surface": {"kind": "euclidean"}, "curve": {"kind": "spline"}},
    {"surface": {"kind": "euclidean"}, "curve": {"kind": "width_sphere"}},
    {"surface": {"kind": "euclidean"}, "curve": {"kind": "two_arc"}},
])
def test_bad_specs(doc):
    with pytest.raises(ConfigError):
        build_table(RunConfig.from_dict(doc))


# --- orbit -------------------------------------------------------------------------------
def test_orbit_circle_period_three(tmp_path):
    out = tmp_path / "o"
    code = main(["orbit", "--config", write_cfg(tmp_path, CIRCLE), "--out", str(out), "--theta0",
                 str(np.pi / 3), "--n", "3"])
    assert code == 0
    rows = read_csv(out / "orbit.csv")
    assert list(rows[0]) == ["n", "s", "theta", "s_lifted", "H_n"]
    assert float(rows[3]["s_lifted"]) - float(rows[0]["s_lifted"]) == pytest.approx(2 * np.pi, abs=1e-12)
    svg = (out / "orbit.svg").read_text()
    assert svg.count("<polyline") == 3
    assert all(len(seg.split('"')[1].split()) >= 64 for seg in svg.split("<polyline")[1:])


def test_orbit_width_table_returns(tmp_path):
    out = tmp_path / "w"
    assert main(["orbit", "--config", write_cfg(tmp_path, WIDTH), "--out", str(out), "--theta0",
                 str(np.pi / 2), "--n", "2", "--format", "csv"]) == 0
    rows = read_csv(out / "orbit.csv")
    L = build_table(RunConfig.from_dict(WIDTH))[0].L
    s_end = float(rows[2]["s"])
    assert min(s_end, L - s_end) < 1e-8
    assert not (out / "orbit.svg").exists()


def test_invalid_config_exit_2(tmp_path, capsys):
    out = tmp_path / "bad"
    code = main(["orbit", "--config", write_cfg(tmp_path, {"surface": {"kind": "euclidean"}}), "--out", str(out)])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["error"] == "ConfigError"
    assert json.loads((out / "error.json").read_text())["message"] == err["message"]


def test_missing_config_file_exit_2(tmp_path):
    assert main(["orbit", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2


def test_bad_flags_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, CIRCLE)
    assert main(["orbit", "--config", cfg, "--format", "png"]) == 2
    assert main(["orbit", "--config", cfg, "--seed", "-3"]) == 2
    assert main(["verify", "nothing", "--config", cfg]) == 2


# --- phase portrait --------------------------------------------------------------------
def test_phase_portrait_deterministic(tmp_path):
    doc = {**CIRCLE, "params": {"n_orbits": 6, "n_bounces": 50, "n_s": 2, "jitter": 0.5}}
    cfg = write_cfg(tmp_path, doc)
    for d in ("a", "b"):
        assert main(["phase-portrait", "--config", cfg, "--out", str(tmp_path / d), "--seed", "11"]) == 0
    for f in ("phase.csv", "phase.svg", "phase.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    main(["phase-portrait", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "12"])
    assert (tmp_path / "a" / "phase.csv").read_bytes() != (tmp_path / "c" / "phase.csv").read_bytes()


def test_phase_portrait_circle_rows_are_horizontal(tmp_path):
    cfg = write_cfg(tmp_path, {**CIRCLE, "params": {"n_orbits": 3, "n_bounces": 40}})
    main(["phase-portrait", "--config", cfg, "--out", str(tmp_path / "p")])
    rows = read_csv(tmp_path / "p" / "phase.csv")
    by_orbit = {}
    for r in rows:
        by_orbit.setdefault(r["orbit"], []).append(float(r["theta"]))
    assert len(by_orbit) == 3
    assert all(np.ptp(v) < 1e-12 for v in by_orbit.values())


# --- verify ------------------------------------------------------------------------------
def test_verify_twist_circle(tmp_path):
    out = tmp_path / "t"
    assert main(["verify", "twist", "--config", write_cfg(tmp_path, CIRCLE), "--out", str(out)]) == 0
    rep = json.loads((out / "verify_twist.json").read_text())
    assert rep["verdict"] == "pass" and set(DEFAULT_TOLERANCES) <= set(rep["config_tolerances"])


def test_verify_mather_width_fails(tmp_path):
    out = tmp_path / "m"
    doc = {**WIDTH, "params": {"n_theta": 30}}
    assert main(["verify", "mather", "--config", write_cfg(tmp_path, doc), "--out", str(out)]) == 1
    rep = json.loads((out / "verify_mather.json").read_text())
    assert rep["witnesses"][0]["inputs"]["theta1"] == np.pi / 2
    assert rep["tolerances"]["B_tol"] == 1e-8
    assert (out / "verify_mather_witnesses.csv").exists()


def test_verify_hubacher_two_arc(tmp_path):
    out = tmp_path / "h"
    assert main(["verify", "hubacher", "--config", write_cfg(tmp_path, TWO_ARC), "--out", str(out)]) == 0
    rep = json.loads((out / "verify_hubacher.json").read_text())
    assert rep["summary"]["ratio"] == pytest.approx(0.5, rel=0.02)


def test_verify_env_override_changes_verdict(tmp_path, monkeypatch):
    monkeypatch.setenv("GEOBILLIARD_TOL_HUBACHER_REL", "1e-14")
    out = tmp_path / "h"
    assert main(["verify", "hubacher", "--config", write_cfg(tmp_path, TWO_ARC), "--out", str(out)]) == 1
    rep = json.loads((out / "verify_hubacher.json").read_text())
    assert rep["config_tolerances"]["hubacher_rel"] == 1e-14


def test_verify_inconclusive_exit_3(tmp_path):
    assert main(["verify", "hubacher", "--config", write_cfg(tmp_path, CIRCLE), "--out", str(tmp_path / "i")]) == 3


def test_verify_width_and_measure(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "width", "--config", write_cfg(tmp_path, WIDTH), "--out", str(out)]) == 0
    doc = {**CIRCLE, "params": {"n": 20}}
    assert main(["verify", "measure", "--config", write_cfg(tmp_path, doc, "m.json"), "--out", str(out)]) == 0


def test_verify_precondition_error_exit_2(tmp_path):
    doc = {**CIRCLE, "params": {"s1": 0.0}}
    assert main(["verify", "mather", "--config", write_cfg(tmp_path, doc), "--out", str(tmp_path / "e")]) == 2
    assert (tmp_path / "e" / "error.json").exists()


def test_verify_caustic_writes_svg(tmp_path):
    doc = {**CIRCLE, "params": {"n_orbits": 3, "n_bounces": 500, "min_bounces": 500, "expect_graphs": True}}
    out = tmp_path / "c"
    assert main(["verify", "caustic", "--config", write_cfg(tmp_path, doc), "--out", str(out)]) == 0
    assert 'fill="red"' in (out / "verify_caustic.svg").read_text()


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "geobilliard.cli", "verify", "convexity", "--config",
                          write_cfg(tmp_path, CIRCLE), "--out", str(tmp_path / "x")],
                         capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stderr
