"""The four figure kinds: concentration rate, mode profiles, coercivity
constants, and the shooting-cube exit map.

Figures render deterministically: fixed hash salt for SVG ids and, unless
timestamps are requested, no embedded dates.
"""
from __future__ import annotations

from math import gamma

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import check_same_config, read_csv, read_report, require_columns

plt.rcParams["svg.hashsalt"] = "reportplots"


def _save(fig, out_base, timestamps=False):
    meta = None if timestamps else {"Date": None}
    paths = []
    for ext in ("png", "svg"):
        path = f"{out_base}.{ext}"
        fig.savefig(path, metadata=meta if ext == "svg" else None, dpi=120)
        paths.append(path)
    plt.close(fig)
    return paths


def rate_constant(n: int) -> float:
    """kappa = ((n-6)/(n B((n-4)/2, n/2)))^{2/(n-4)} via Gamma functions."""
    b = gamma((n - 4) / 2.0) * gamma(n / 2.0) / gamma(n - 2.0)
    return ((n - 6.0) / (n * b)) ** (2.0 / (n - 4.0))


def plot_rate(csv_paths, out_base, n=7, timestamps=False):
    """Overlay measured lambda(t) with the closed-form rate; annotate the slope.

    Returns (fitted slope, theory slope, written paths).
    """
    if isinstance(csv_paths, (str, bytes)) or not hasattr(csv_paths, "__iter__"):
        csv_paths = [csv_paths]
    metas, runs = [], []
    for p in csv_paths:
        meta, cols = read_csv(p)
        require_columns(cols, ("t", "lambda"), p)
        metas.append(meta)
        runs.append(cols)
    check_same_config(metas, csv_paths)

    kap = rate_constant(n)
    theory = -2.0 / (n - 6.0)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    slope = None
    for cols in runs:
        at = np.abs(cols["t"])
        ax.loglog(at, cols["lambda"], lw=1.6, label="measured")
        slope = float(np.polyfit(np.log(at), np.log(cols["lambda"]), 1)[0])
    at = np.abs(runs[0]["t"])
    closed = (1.0 / kap) * (kap * at) ** theory
    ax.loglog(at, closed, "k--", lw=1.0, label="closed form")
    ax.set_xlabel("|t|")
    ax.set_ylabel("lambda")
    ax.set_title("small-bubble scale vs time")
    ax.legend(loc="best")
    ax.text(0.04, 0.08,
            f"fitted slope {slope:.6f}\ntheory {theory:.6f}",
            transform=ax.transAxes, fontsize=9,
            bbox=dict(boxstyle="round", fc="w", ec="0.6"))
    paths = _save(fig, out_base, timestamps)
    return slope, theory, paths


def plot_modes(json_path, out_base, timestamps=False):
    """Two-panel internal-mode profiles with their far-field decay."""
    _, rep = read_report(json_path)
    for key in ("r", "y1", "y2", "nu"):
        if key not in rep:
            from .io import SchemaError
            raise SchemaError(f"{json_path}: mode report lacks {key!r}")
    r = np.asarray(rep["r"])
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.6), sharex=True)
    for ax, key, label in ((axes[0], "y1", "Y1"), (axes[1], "y2", "Y2")):
        y = np.asarray(rep[key])
        ax.semilogx(r, y, lw=1.4)
        ax.axhline(0.0, color="0.7", lw=0.6)
        ax.set_xlabel("r")
        ax.set_title(f"{label}  (nu = {rep['nu']:.6f})")
    paths = _save(fig, out_base, timestamps)
    return paths


def plot_coercivity(json_path, out_base, timestamps=False):
    """Histogram of the per-form empirical constants with the min marked."""
    _, rep = read_report(json_path)
    probes = rep.get("probes", rep if isinstance(rep, list) else None)
    if not probes:
        from .io import SchemaError
        raise SchemaError(f"{json_path}: no coercivity probes found")
    names = [p["form_id"] for p in probes]
    cs = np.array([p["empirical_c"] for p in probes])
    fig, ax = plt.subplots(figsize=(7.2, 4.0))
    ax.bar(range(len(cs)), cs, color="#4878a8")
    ax.axhline(cs.min(), color="crimson", lw=1.0, ls="--",
               label=f"min ratio {cs.min():.4f}")
    ax.set_xticks(range(len(cs)))
    ax.set_xticklabels(names, rotation=40, ha="right", fontsize=8)
    ax.set_ylabel("empirical coercivity constant")
    ax.legend(loc="best")
    fig.tight_layout()
    paths = _save(fig, out_base, timestamps)
    return paths


def plot_exitmap(csv_path, out_base, timestamps=False):
    """Exit faces of shooting-cube starts, per coordinate plane."""
    _, cols = read_csv(csv_path)
    require_columns(cols, ("p0", "p1", "p2", "exited", "face"), csv_path)
    pairs = ((0, 1), (0, 2), (1, 2))
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.4))
    face = cols["face"].astype(int)
    for ax, (i, j) in zip(axes, pairs):
        xi, xj = cols[f"p{i}"], cols[f"p{j}"]
        none = face == 0
        ax.scatter(xi[none], xj[none], marker="s", c="0.6", label="no exit")
        for k, color in ((1, "#c44e52"), (2, "#55a868"), (3, "#4c72b0")):
            sel = np.abs(face) == k
            if sel.any():
                ax.scatter(xi[sel], xj[sel], marker="o",
                           c=[color], label=f"exit p{k-1}")
        ax.set_xlabel(f"p{i}(T)")
        ax.set_ylabel(f"p{j}(T)")
        ax.set_xlim(-0.6, 0.6)
        ax.set_ylim(-0.6, 0.6)
    axes[0].legend(loc="upper left", fontsize=7)
    fig.suptitle("shooting-cube exit map")
    fig.tight_layout()
    paths = _save(fig, out_base, timestamps)
    return paths
