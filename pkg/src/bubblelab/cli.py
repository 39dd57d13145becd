"""Command-line entry point: every experiment behind one reproducible tool.

Subcommands: verify-constants, spectrum, coercivity, virial, reduced,
shoot, evolve, decompose.  Options can come from flags or a flat
key=value config file (flags override the file).  Exit codes follow the
sysexits convention: 0 ok, 2 identity-check failure, 64 usage, 65 bad
data, 70 internal error (non-convergence).
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bubble
from .fields import ScalePhase, field_from_profile
from .grid import RadialGrid, gauss_grid, geometric_grid
from .reporting import (TRAJECTORY_SCHEMA, read_csv, trajectory_columns,
                        weight_profile_columns, write_csv, write_json)

EX_OK, EX_FAIL, EX_USAGE, EX_DATA, EX_INTERNAL = 0, 2, 64, 65, 70


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class Parser(argparse.ArgumentParser):
    """argparse with the sysexits usage code."""

    def error(self, message):
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _load_config_file(path) -> dict:
    out = {}
    try:
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line or line.startswith(("#", ";")):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}", EX_DATA) from exc
    except ValueError as exc:
        raise CliError(str(exc), EX_DATA) from exc
    return out


def _out_path(args, default_name) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get("BUBBLELAB_OUT_DIR", "."))
    root.mkdir(parents=True, exist_ok=True)
    return root / default_name


def _check_dimension(n):
    if n < 7:
        raise CliError(f"dimension N must be >= 7 (got {n})", EX_USAGE)
    return n


def _mesh_from_args(args):
    return geometric_grid(args.N, r_max=args.r_max, r_cell=args.r_cell,
                          per_decade=args.grid_nodes)


def _config_dict(args) -> dict:
    skip = {"func", "out", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- subcommands ---------------------------------------------------------------


def cmd_verify_constants(args):
    for n in args.N:
        _check_dimension(n)
    report, ok = {}, True
    for n in args.N:
        if args.grid_file:
            try:
                grid = RadialGrid.from_json(Path(args.grid_file).read_text(), kind="gauss")
            except (OSError, ValueError) as exc:
                raise CliError(f"bad grid file: {exc}", EX_DATA) from exc
            if grid.n != n:
                raise CliError(f"grid file is for N={grid.n}, not N={n}", EX_DATA)
        else:
            grid = gauss_grid(n)
        defects = bubble.verify_constants(n, grid)
        report[str(n)] = {"defects": defects, "constants": bubble.explicit_constants(n),
                          "pass": all(d <= args.tol for d in defects.values())}
        ok = ok and report[str(n)]["pass"]
    write_json(_out_path(args, "constants.json"), report, _config_dict(args))
    return EX_OK if ok else EX_FAIL


def cmd_spectrum(args):
    _check_dimension(args.N)
    from .spectral import default_internal_mode
    pair = default_internal_mode(args.N, args.resolution)
    other = default_internal_mode(args.N, "coarse" if args.resolution == "fine" else "fine")
    r = np.geomspace(1e-3, 60.0, 800)
    s1, s2 = pair.splines()
    g = pair.grid
    wv = bubble.ground_state(args.N, g.nodes)
    lwv = bubble.scaling_derivative(args.N, g.nodes)
    payload = {
        "n": args.N,
        "nu": pair.nu,
        "nu_other_resolution": other.nu,
        "nu_drift": abs(pair.nu - other.nu) / pair.nu,
        "residual_1": pair.residual_1,
        "residual_2": pair.residual_2,
        "y2_norm": pair.y2_norm,
        "y1_y2_product": g.pair(pair.y1, pair.y2),
        "w_y1_rel": g.pair(wv, pair.y1) / (g.norm_l2(wv) * g.norm_l2(pair.y1)),
        "lw_y2_rel": g.pair(lwv, pair.y2) / (g.norm_l2(lwv) * g.norm_l2(pair.y2)),
        "r": r, "y1": s1(r), "y2": s2(r),
    }
    write_json(_out_path(args, "modes.json"), payload, _config_dict(args))
    return EX_OK


def cmd_coercivity(args):
    _check_dimension(args.N)
    from .coercivity import FORM_IDS, coercivity_probe
    from .spectral import default_internal_mode
    forms = FORM_IDS if args.forms == ["all"] else args.forms
    bad = [f for f in forms if f not in FORM_IDS]
    if bad:
        raise CliError(f"unknown form ids: {bad}; choose from {FORM_IDS}", EX_USAGE)
    pair = default_internal_mode(args.N)
    grid = _mesh_from_args(args)
    reports = [coercivity_probe(f, grid, pair, samples=args.samples, seed=args.seed)
               for f in forms]
    ok = all(r["violations"] == 0 and r["empirical_c"] > 0 for r in reports)
    write_json(_out_path(args, "coercivity.json"), {"probes": reports, "pass": ok},
               _config_dict(args))
    return EX_OK if ok else EX_FAIL


def cmd_virial(args):
    _check_dimension(args.N)
    from .virial import build_q, virial_identity_suite
    try:
        weight = build_q(args.N, c=args.c, big_r=args.R)
    except (ValueError, RuntimeError) as exc:
        raise CliError(f"weight construction failed: {exc}", EX_INTERNAL) from exc
    grid = _mesh_from_args(args)
    rep = {
        "c": args.c, "R": args.R, "splice_radius": weight.r0,
        "constant_beyond": weight.r_const,
        "properties": weight.property_report(),
        "identities": virial_identity_suite(weight, grid, trials=args.trials,
                                            seed=args.seed),
    }
    write_json(_out_path(args, "virial.json"), rep, _config_dict(args))
    if args.profile_csv:
        r = np.geomspace(1e-3 * args.R, 1.2 * weight.r_const, 4000)
        write_csv(args.profile_csv, weight_profile_columns(weight, r), _config_dict(args))
    return EX_OK


def cmd_reduced(args):
    _check_dimension(args.N)
    from .modulation import ReducedState, closed_form_lambda, integrate_reduced
    if not (args.t0 < args.t1 < 0):
        raise CliError("need t0 < t1 < 0", EX_USAGE)
    lam0 = args.lam0 if args.lam0 else closed_form_lambda(args.N, args.t0)
    s0 = ReducedState(t=args.t0, lam=lam0, theta=args.theta0,
                      a1p=args.a1p, a1m=args.a1m, a2p=args.a2p, a2m=args.a2m)
    try:
        traj = integrate_reduced(args.N, s0, args.t1, nu=args.nu)
    except RuntimeError as exc:
        raise CliError(str(exc), EX_INTERNAL) from exc
    e2w = 2.0 * bubble.explicit_constants(args.N)["energy_W"]
    cols = {
        "t": traj.t, "zeta": np.full_like(traj.t, -np.pi / 2),
        "mu": np.ones_like(traj.t), "theta": traj.theta, "lambda": traj.lam,
        "gnorm": np.zeros_like(traj.t), "a1p": traj.a1p, "a1m": traj.a1m,
        "a2p": traj.a2p, "a2m": traj.a2m, "energy": np.full_like(traj.t, e2w),
    }
    write_csv(_out_path(args, "reduced.csv"), cols, _config_dict(args),
              schema=TRAJECTORY_SCHEMA)
    return EX_OK


def cmd_shoot(args):
    _check_dimension(args.N)
    from .modulation import shooting_demo
    if not (args.T < args.t1 < 0):
        raise CliError("need T < t1 < 0", EX_USAGE)
    vals = np.array(sorted(set([-args.grid_step, 0.0, args.grid_step])))
    starts = [(a, b, c) for a in vals for b in vals for c in vals]
    reports = shooting_demo(args.N, args.T, args.t1, starts, nu=args.nu)
    cols = {
        "p0": [r["start"][0] for r in reports],
        "p1": [r["start"][1] for r in reports],
        "p2": [r["start"][2] for r in reports],
        "exited": [1.0 if r["exited"] else 0.0 for r in reports],
        "exit_time": [r["exit_time"] if r["exit_time"] is not None else np.nan
                      for r in reports],
        "face": [_face_code(r["exit_face"]) for r in reports],
        "repulsive_ok": [1.0 if r["repulsive_ok"] else 0.0 for r in reports],
    }
    write_csv(_out_path(args, "shoot.csv"), cols, _config_dict(args))
    if not all(r["repulsive_ok"] for r in reports):
        return EX_FAIL
    return EX_OK


def _face_code(face):
    # encode exit faces as signed coordinate indices: +-(j+1); 0 = no exit
    if face is None:
        return 0.0
    sign = 1.0 if face.endswith("+") else -1.0
    return sign * (int(face[1]) + 1)


def cmd_evolve(args):
    _check_dimension(args.N)
    from .evolve import EvolutionConfig, SynthesisError, evolve, synth_initial_data
    from .modulation import ModulationState
    from .spectral import default_internal_mode
    grid = _mesh_from_args(args)
    pair = default_internal_mode(args.N)
    try:
        u0, synth = synth_initial_data(args.lam0, args.a1, args.a2, grid, pair)
        cfg = EvolutionConfig(dt=args.dt, n_steps=args.steps,
                              decompose_every=args.decompose_every,
                              lambda_floor=min(args.lam0, 0.05),
                              absorb_strength=args.absorb)
    except (SynthesisError, ValueError) as exc:
        raise CliError(str(exc), EX_USAGE) from exc
    rec = evolve(u0, cfg, pair=pair,
                 guess=ModulationState(-np.pi / 2, 1.0, 0.0, args.lam0))
    write_csv(_out_path(args, "evolve.csv"), trajectory_columns(rec),
              _config_dict(args), schema=TRAJECTORY_SCHEMA)
    summary = {
        "status": rec.status, "exit_time": rec.exit_time,
        "energy_drift": rec.energy_drift(), "mass_drift": rec.mass_drift(),
        "layer_activity": rec.layer_activity, "synthesis": synth,
    }
    if args.summary:
        write_json(args.summary, summary, _config_dict(args))
    return EX_OK if rec.status == "ok" else EX_FAIL


def cmd_decompose(args):
    _check_dimension(args.N)
    from .evolve import checkpoint_from_json
    from .modulation import DecompositionError, ModulationState, decompose
    grid = _mesh_from_args(args)
    try:
        text = Path(args.field).read_text()
        t, u = checkpoint_from_json(text, grid)
    except (OSError, ValueError) as exc:
        raise CliError(f"bad field file: {exc}", EX_DATA) from exc
    try:
        z, m, th, la = (float(x) for x in args.guess.split(","))
        guess = ModulationState(z, m, th, la)
    except ValueError as exc:
        raise CliError(f"bad guess (need zeta,mu,theta,lam): {exc}", EX_USAGE) from exc
    pair = None
    if args.with_modes:
        from .spectral import default_internal_mode
        pair = default_internal_mode(args.N)
    try:
        d = decompose(u, guess, pair=pair)
    except DecompositionError as exc:
        raise CliError(f"decomposition failed: {exc}", EX_INTERNAL) from exc
    payload = {
        "t": t,
        "state": {"zeta": d.state.zeta, "mu": d.state.mu,
                  "theta": d.state.theta, "lambda": d.state.lam},
        "gnorm_l2": d.g.norm_l2(), "gnorm_energy": d.g.norm_energy(),
        "residuals": d.residuals, "iterations": d.iterations,
        "a1p": d.a1p, "a1m": d.a1m, "a2p": d.a2p, "a2m": d.a2m,
    }
    write_json(_out_path(args, "decompose.json"), payload, _config_dict(args))
    return EX_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> Parser:
    p = Parser(prog="bubblelab",
               description="Desk-scale two-bubble toolkit for the energy-critical NLS")
    p.add_argument("--version", action="version", version=f"bubblelab {__version__}")
    p.add_argument("--config", help="flat key=value config file; flags override")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mesh=True):
        sp.add_argument("--N", type=int, default=7)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--out", help="output path (default under BUBBLELAB_OUT_DIR)")
        sp.add_argument("--jobs", type=int, default=1,
                        help="sweep parallelism (default 1 for reproducibility)")
        if mesh:
            sp.add_argument("--grid-nodes", type=int, default=320,
                            help="mesh nodes per decade of r")
            sp.add_argument("--r-max", type=float, default=2000.0)
            sp.add_argument("--r-cell", type=float, default=2e-4)

    sp = sub.add_parser("verify-constants", help="explicit-identity cross-checks")
    sp.add_argument("--N", type=int, nargs="+", default=[7, 8, 9, 11])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--out")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--grid-file", help="serialized quadrature grid to use")
    sp.set_defaults(func=cmd_verify_constants)

    sp = sub.add_parser("spectrum", help="internal mode of the linearized operators")
    common(sp, mesh=False)
    sp.add_argument("--resolution", choices=["coarse", "fine"], default="fine")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("coercivity", help="quadratic-form coercivity probes")
    common(sp)
    sp.add_argument("--forms", nargs="+", default=["all"])
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(func=cmd_coercivity)

    sp = sub.add_parser("virial", help="virial weight properties and identities")
    common(sp)
    sp.add_argument("--c", type=float, default=0.1)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--profile-csv", help="also export the weight profile")
    sp.set_defaults(func=cmd_virial)

    sp = sub.add_parser("reduced", help="reduced parameter-ODE trajectory")
    common(sp, mesh=False)
    sp.add_argument("--t0", type=float, default=-1e4)
    sp.add_argument("--t1", type=float, default=-1e2)
    sp.add_argument("--lam0", type=float, default=0.0,
                    help="initial scale (default: on the closed form)")
    sp.add_argument("--theta0", type=float, default=0.0)
    sp.add_argument("--nu", type=float, default=0.0)
    sp.add_argument("--a1p", type=float, default=0.0)
    sp.add_argument("--a1m", type=float, default=0.0)
    sp.add_argument("--a2p", type=float, default=0.0)
    sp.add_argument("--a2m", type=float, default=0.0)
    sp.set_defaults(func=cmd_reduced)

    sp = sub.add_parser("shoot", help="shooting-cube exit map")
    common(sp, mesh=False)
    sp.add_argument("--T", type=float, default=-50.0)
    sp.add_argument("--t1", type=float, default=-5.0)
    sp.add_argument("--grid-step", type=float, default=0.4)
    sp.add_argument("--nu", type=float, default=0.1058594618)
    sp.set_defaults(func=cmd_shoot)

    sp = sub.add_parser("evolve", help="full radial PDE run with tracking")
    common(sp)
    sp.add_argument("--lam0", type=float, default=0.1)
    sp.add_argument("--a1", type=float, default=0.0)
    sp.add_argument("--a2", type=float, default=0.0)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--decompose-every", type=int, default=25)
    sp.add_argument("--absorb", type=float, default=0.0)
    sp.add_argument("--summary", help="also write a JSON summary")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("decompose", help="two-bubble decomposition of a stored field")
    common(sp)
    sp.add_argument("--field", required=True, help="checkpoint JSON file")
    sp.add_argument("--guess", default="-1.5707963,1.0,0.0,0.1")
    sp.add_argument("--with-modes", action="store_true")
    sp.set_defaults(func=cmd_decompose)
    return p


def _merge_negative_values(argv):
    """Join '--flag -1e4' into '--flag=-1e4' so scientific notation parses."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a.startswith("--") and "=" not in a and i + 1 < len(argv):
            nxt = argv[i + 1]
            if nxt.startswith("-") and len(nxt) > 1:
                try:
                    float(nxt)
                except ValueError:
                    pass
                else:
                    out.append(f"{a}={nxt}")
                    i += 2
                    continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _merge_negative_values(list(sys.argv[1:] if argv is None else argv))
    # config file provides defaults; flags override
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            cfg = _load_config_file(argv[idx + 1])
        except IndexError:
            parser.error("--config needs a path")
        except CliError as exc:
            print(f"bubblelab: {exc}", file=sys.stderr)
            return exc.code
        del argv[idx:idx + 2]
        if argv and not argv[0].startswith("-"):
            sub = argv[0]
            extra = []
            for key, val in cfg.items():
                flag = "--" + key.replace("_", "-")
                if flag not in argv:
                    extra += [flag, val]
            argv = [sub] + extra + argv[1:]
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"bubblelab: {exc}", file=sys.stderr)
        return exc.code
    except SystemExit as exc:
        return exc.code if exc.code is not None else EX_OK
    except Exception as exc:   # internal failures map to sysexits software code
        print(f"bubblelab: internal error: {exc}", file=sys.stderr)
        return EX_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
