#!/usr/bin/env python3
"""Shooting-cube exit map over a lattice of normalized starts.

Usage: python scripts/shooting_map.py [--step 0.25] [--out shoot.csv]
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bubblelab.cli import main as cli_main
from bubblelab.reporting import read_csv


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--step", type=float, default=0.25)
    ap.add_argument("--T", type=float, default=-50.0)
    ap.add_argument("--t1", type=float, default=-5.0)
    ap.add_argument("--out", default="shoot.csv")
    args = ap.parse_args()
    code = cli_main(["shoot", "--grid-step", str(args.step), "--T", str(args.T),
                     "--t1", str(args.t1), "--out", args.out])
    if code != 0:
        return code
    _, cols = read_csv(args.out)
    exited = int(cols["exited"].sum())
    print(f"wrote {args.out}: {exited}/{len(cols['exited'])} starts exit "
          f"within [{args.T}, {args.t1}]; repulsivity holds on all recorded steps: "
          f"{bool((cols['repulsive_ok'] == 1).all())}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
