import json
import subprocess
import sys

import pytest

from periodfn.cli import run

SEIFERT = {"flow": {"type": "gallery", "name": "seifert", "params": {"k": 3}},
           "grid": {"axes": [[-1, -0.5, 0, 0.5], [-1, -0.5, 0, 0.5], [0, 0.25, 0.5, 0.75]],
                    "region": {"type": "disk", "r_max": 1}}}
QUARTIC = {"flow": {"type": "polynomial_field", "dim": 2,
                    "components": ["-2*y", "4*x^3"], "class": "Cinf", "bound": 10},
           "random_points": {"n": 6, "bounds": [[-1, 1], [-1, 1]],
                             "region": {"type": "disk", "r_max": 1, "r_min": 0.3}},
           "grid": {"resolution": 11, "bounds": [[-0.5, 0.5], [-0.5, 0.5]]}}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(p)


def test_field_and_generator_succeed(tmp_path):
    cfg = _write(tmp_path, SEIFERT)
    out = str(tmp_path / "out")
    assert run(["field", "--config", cfg, "--out", out]) == 0
    assert run(["generator", "--config", cfg, "--out", out]) == 0
    text = (tmp_path / "out" / "field.csv").read_text().splitlines()
    assert text[0] == "# seed=0 command=field flow=seifert(k=3)"
    rep = json.loads((tmp_path / "out" / "zp_reports.json").read_text())
    assert rep["seed"] == 0 and rep["divisions"] == []


def test_tight_tolerance_reports_violation(tmp_path):
    # lattice residuals are about 5e-13, above this verification tolerance
    cfg = _write(tmp_path, dict(SEIFERT, field={"verify_tol": 1e-16}))
    assert run(["field", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_classify_is_deterministic_per_seed(tmp_path):
    cfg = _write(tmp_path, QUARTIC)
    texts = []
    for seed, sub in ((4, "a"), (4, "b"), (5, "c")):
        d = tmp_path / sub
        assert run(["classify", "--config", cfg, "--out", str(d), "--seed", str(seed)]) == 0
        texts.append((d / "classify.csv").read_text())
    assert texts[0] == texts[1]
    assert texts[0] != texts[2]
    assert texts[0].startswith("# seed=4 command=classify")


def test_fixedpoints_and_geometry(tmp_path):
    cfg = _write(tmp_path, QUARTIC)
    assert run(["fixedpoints", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "fixedpoints.json").read_text())
    [fp] = rep["fixed_points"]
    assert fp["verdict"] == "DegenerateBlock"
    assert fp["fixed_point"] == [0.0, 0.0]
    assert run(["geometry", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "geometry.csv").read_text().splitlines()
    assert len(rows) == 2 + 6


def test_blowup_probe(tmp_path):
    cfg = dict(QUARTIC, probe={"kind": "blowup", "fixed_point": [0, 0],
                               "radii": [0.4, 0.1, 0.02], "threshold": 10},
               detector={"horizon": 30.0, "scan_step": 0.02})
    assert run(["probe", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "blowup.json").read_text())
    assert rep["blow_up"] is True and len(rep["rows"]) == 3


@pytest.mark.parametrize("cfg", [
    {"flow": {"type": "gallery", "name": "nope"}},
    {"flow": {"type": "gallery", "name": "seifert", "params": {"k": 1}}},
    {"flow": {"type": "polynomial_field", "dim": 2, "components": ["x+*y", "x"]}},
    {"flow": {"type": "polynomial_field", "dim": 2, "components": ["x^0.5", "x"]}},
    {"flow": {"type": "gallery", "name": "rotation"}},  # no points
    {"flow": {"type": "gallery", "name": "rotation"}, "points": [[1, 2, 3]]},
    {"flow": {"type": "gallery", "name": "rotation"}, "points": [[1, 0]],
     "detector": {"bogus": 1}},
    "{not json",
    "[1, 2]",
])
def test_config_errors_exit_2(tmp_path, cfg):
    assert run(["classify", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_missing_config_exit_2(tmp_path):
    assert run(["classify", "--config", str(tmp_path / "absent.json")]) == 2
    assert run(["field"]) == 2


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, {"flow": {"type": "gallery", "name": "rotation"},
                            "points": [[1.0, 0.0]]})
    proc = subprocess.run([sys.executable, "-m", "periodfn", "classify", "--config", cfg,
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "periodfn", "bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
