"""Figure-generation CLI over bubblelab output files.

Subcommands: plot-rate, plot-modes, plot-coercivity, plot-exitmap.
Each writes <out>.png and <out>.svg.  Outputs regenerate byte-stably;
embedded timestamps are off unless --timestamps is passed.
"""
from __future__ import annotations

import argparse
import sys

from .figures import plot_coercivity, plot_exitmap, plot_modes, plot_rate
from .io import SchemaError


def build_parser():
    p = argparse.ArgumentParser(prog="reportplots")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plot-rate", help="lambda(t) vs the closed-form rate")
    sp.add_argument("csv", nargs="+")
    sp.add_argument("--N", type=int, default=7)
    sp.add_argument("--out", default="rate")
    sp.add_argument("--timestamps", action="store_true")

    sp = sub.add_parser("plot-modes", help="internal-mode profiles")
    sp.add_argument("json")
    sp.add_argument("--out", default="modes")
    sp.add_argument("--timestamps", action="store_true")

    sp = sub.add_parser("plot-coercivity", help="coercivity-constant chart")
    sp.add_argument("json")
    sp.add_argument("--out", default="coercivity")
    sp.add_argument("--timestamps", action="store_true")

    sp = sub.add_parser("plot-exitmap", help="shooting-cube exit map")
    sp.add_argument("csv")
    sp.add_argument("--out", default="exitmap")
    sp.add_argument("--timestamps", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot-rate":
            slope, theory, paths = plot_rate(args.csv, args.out, n=args.N,
                                             timestamps=args.timestamps)
            print(f"fitted slope {slope:.6f} (theory {theory:.6f}); wrote {', '.join(paths)}")
        elif args.command == "plot-modes":
            paths = plot_modes(args.json, args.out, timestamps=args.timestamps)
            print(f"wrote {', '.join(paths)}")
        elif args.command == "plot-coercivity":
            paths = plot_coercivity(args.json, args.out, timestamps=args.timestamps)
            print(f"wrote {', '.join(paths)}")
        elif args.command == "plot-exitmap":
            paths = plot_exitmap(args.csv, args.out, timestamps=args.timestamps)
            print(f"wrote {', '.join(paths)}")
    except (SchemaError, OSError) as exc:
        print(f"reportplots: {exc}", file=sys.stderr)
        return 65
    return 0


if __name__ == "__main__":
    sys.exit(main())
