#!/usr/bin/env python3
"""Reduced-model concentration rate: integrate, fit the power law, export CSV.

Usage: python scripts/rate_experiment.py [--N 7] [--t0 -1e4] [--t1 -1e2] [--out reduced.csv]
"""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bubblelab.cli import main as cli_main
from bubblelab.modulation import closed_form_lambda
from bubblelab.reporting import read_csv


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=7)
    ap.add_argument("--t0", type=float, default=-1e4)
    ap.add_argument("--t1", type=float, default=-1e2)
    ap.add_argument("--out", default="reduced.csv")
    args = ap.parse_args()

    code = cli_main(["reduced", "--N", str(args.N), "--t0", str(args.t0),
                     "--t1", str(args.t1), "--out", args.out])
    if code != 0:
        return code
    _, cols = read_csv(args.out)
    slope = np.polyfit(np.log(np.abs(cols["t"])), np.log(cols["lambda"]), 1)[0]
    ref = closed_form_lambda(args.N, cols["t"])
    print(f"wrote {args.out} ({len(cols['t'])} samples)")
    print(f"fitted log-log slope: {slope:.6f}  (theory {-2.0/(args.N-6.0)})")
    print(f"max relative defect vs closed form: {np.max(np.abs(cols['lambda']-ref)/ref):.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
