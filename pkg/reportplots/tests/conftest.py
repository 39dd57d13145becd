"""Schema-conformant fixture inputs, written the way bubblelab writes them."""
import json
from math import gamma

import numpy as np
import pytest


def fmt(x):
    return format(float(x), ".17g")


def write_fixture_csv(path, columns, config_hash="deadbeefdeadbeef"):
    keys = list(columns)
    lines = [
        "# bubblelab 0.1.0",
        f"# config_hash: {config_hash}",
        f"# schema: {','.join(keys)}",
        ",".join(keys),
    ]
    length = len(columns[keys[0]])
    for i in range(length):
        lines.append(",".join(fmt(columns[k][i]) for k in keys))
    path.write_text("\n".join(lines) + "\n")


def write_fixture_report(path, report, config_hash="deadbeefdeadbeef"):
    path.write_text(json.dumps({
        "tool": "bubblelab 0.1.0",
        "config_hash": config_hash,
        "config": {},
        "report": report,
    }))


@pytest.fixture
def reduced_csv(tmp_path):
    """Reduced-model trajectory on the closed-form rate, n = 7."""
    n = 7
    b = gamma((n - 4) / 2.0) * gamma(n / 2.0) / gamma(n - 2.0)
    kap = ((n - 6.0) / (n * b)) ** (2.0 / (n - 4.0))
    t = -np.geomspace(1e2, 1e4, 201)[::-1]
    lam = (1.0 / kap) * (kap * np.abs(t)) ** (-2.0 / (n - 6.0))
    zeros = np.zeros_like(t)
    cols = {
        "t": t, "zeta": np.full_like(t, -np.pi / 2), "mu": np.ones_like(t),
        "theta": zeros, "lambda": lam, "gnorm": zeros,
        "a1p": zeros, "a1m": zeros, "a2p": zeros, "a2m": zeros,
        "energy": np.full_like(t, 2.0),
    }
    path = tmp_path / "reduced.csv"
    write_fixture_csv(path, cols)
    return path


@pytest.fixture
def modes_json(tmp_path):
    r = np.geomspace(1e-3, 60.0, 400)
    rep = {
        "n": 7, "nu": 0.10585946,
        "y1": (np.exp(-0.23 * r) * np.cos(0.23 * r)).tolist(),
        "y2": (1.4169 * np.exp(-0.23 * r) * np.sin(0.23 * r + 0.7)).tolist(),
        "r": r.tolist(),
    }
    path = tmp_path / "modes.json"
    write_fixture_report(path, rep)
    return path


@pytest.fixture
def coercivity_json(tmp_path):
    forms = ["Lp", "Lm", "Lp_r1", "Lm_r1", "Lp_r2", "Lm_r2",
             "L_complex", "L_complex_r1", "L_complex_r2", "two_bubble"]
    rng = np.random.default_rng(3)
    rep = {"probes": [
        {"form_id": f, "samples": 1000, "seed": 0,
         "empirical_c": float(0.02 + 0.3 * rng.random()),
         "min_ratio": 0.02, "max_ratio": 0.9, "violations": 0}
        for f in forms]}
    path = tmp_path / "coercivity.json"
    write_fixture_report(path, rep)
    return path


@pytest.fixture
def shoot_csv(tmp_path):
    vals = [-0.4, 0.0, 0.4]
    rows = [(a, b, c) for a in vals for b in vals for c in vals]
    face, exited, t_exit = [], [], []
    for a, b, c in rows:
        p = max((abs(a), 1, np.sign(a)), (abs(b), 2, np.sign(b)),
                (abs(c), 3, np.sign(c)))
        if p[0] == 0:
            face.append(0.0)
            exited.append(0.0)
            t_exit.append(np.nan)
        else:
            face.append(p[1] * p[2])
            exited.append(1.0)
            t_exit.append(-20.0)
    cols = {
        "p0": [r[0] for r in rows], "p1": [r[1] for r in rows],
        "p2": [r[2] for r in rows], "exited": exited,
        "exit_time": t_exit, "face": face,
        "repulsive_ok": [1.0] * len(rows),
    }
    path = tmp_path / "shoot.csv"
    write_fixture_csv(path, cols)
    return path
