import json

import numpy as np
import pytest

from bubblelab import bubble
from bubblelab.cli import main
from bubblelab.evolve import checkpoint_to_json
from bubblelab.fields import ScalePhase, field_from_profile
from bubblelab.grid import geometric_grid
from bubblelab.modulation import closed_form_lambda
from bubblelab.reporting import read_csv


def run(args):
    return main([str(a) for a in args])


def test_verify_constants_pass(tmp_path):
    out = tmp_path / "c.json"
    assert run(["verify-constants", "--N", 7, "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert doc["report"]["7"]["pass"]
    assert "config_hash" in doc


def test_verify_constants_rejects_n6(tmp_path):
    assert run(["verify-constants", "--N", 6, "--out", tmp_path / "c.json"]) == 64


def test_verify_constants_corrupt_grid(tmp_path):
    bad = tmp_path / "grid.json"
    bad.write_text("{not json")
    assert run(["verify-constants", "--N", 7, "--grid-file", bad,
                "--out", tmp_path / "c.json"]) == 65


def test_usage_error_exit_code():
    assert run(["no-such-command"]) == 64


def test_reduced_matches_closed_form(tmp_path):
    out = tmp_path / "reduced.csv"
    assert run(["reduced", "--N", 7, "--t0", -1e4, "--t1", -1e2, "--out", out]) == 0
    meta, cols = read_csv(out)
    assert meta["schema"].split(",") == ["t", "zeta", "mu", "theta", "lambda",
                                         "gnorm", "a1p", "a1m", "a2p", "a2m", "energy"]
    ref = closed_form_lambda(7, cols["t"])
    assert np.max(np.abs(cols["lambda"] - ref) / ref) < 1e-3


def test_reduced_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["reduced", "--t0", -1e3, "--t1", -1e2, "--out", a])
    run(["reduced", "--t0", -1e3, "--t1", -1e2, "--out", b])
    assert a.read_bytes() == b.read_bytes()


def test_shoot_center_never_exits(tmp_path):
    out = tmp_path / "shoot.csv"
    assert run(["shoot", "--grid-step", 0.3, "--out", out]) == 0
    meta, cols = read_csv(out)
    center = (cols["p0"] == 0) & (cols["p1"] == 0) & (cols["p2"] == 0)
    assert cols["exited"][center] == 0.0
    assert np.all(cols["repulsive_ok"] == 1.0)


def test_config_file_defaults(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("t0 = -1000\nt1 = -100\n")
    out = tmp_path / "r.csv"
    assert run(["--config", cfg, "reduced", "--out", out]) == 0
    _, cols = read_csv(out)
    assert cols["t"][0] == -1000.0


def test_decompose_roundtrip(tmp_path):
    grid = geometric_grid(7, r_max=2000.0, r_cell=2e-4, per_decade=320)
    u = field_from_profile(grid, lambda r: bubble.ground_state(7, r),
                           ScalePhase(-np.pi / 2, 1.0)) \
        + field_from_profile(grid, lambda r: bubble.ground_state(7, r),
                             ScalePhase(0.02, 0.09))
    field = tmp_path / "field.json"
    field.write_text(checkpoint_to_json(0.0, u))
    out = tmp_path / "state.json"
    code = run(["decompose", "--field", field, "--out", out,
                "--guess=-1.5,1.02,0.0,0.1"])
    assert code == 0
    doc = json.loads(out.read_text())
    st = doc["report"]["state"]
    assert st["zeta"] == pytest.approx(-np.pi / 2, abs=1e-8)
    assert st["mu"] == pytest.approx(1.0, abs=1e-8)
    assert st["theta"] == pytest.approx(0.02, abs=1e-8)
    assert st["lambda"] == pytest.approx(0.09, abs=1e-8)


def test_decompose_bad_field_file(tmp_path):
    bad = tmp_path / "f.json"
    bad.write_text("{}")
    assert run(["decompose", "--field", bad, "--out", tmp_path / "s.json"]) == 65


def test_virial_profile_csv(tmp_path):
    out = tmp_path / "v.json"
    prof = tmp_path / "q.csv"
    assert run(["virial", "--c", 0.1, "--R", 1.0, "--trials", 100,
                "--grid-nodes", 160, "--r-cell", 1e-3, "--r-max", 1000,
                "--out", out, "--profile-csv", prof]) == 0
    doc = json.loads(out.read_text())
    assert doc["report"]["identities"]["pohozaev_violations"] == 0
    _, cols = read_csv(prof)
    assert set(cols) == {"r", "q", "dq", "lapq", "bilapq"}
