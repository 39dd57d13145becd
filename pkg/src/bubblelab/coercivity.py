"""Coercivity probes for the linearized quadratic forms, and the two-bubble
energy expansion checks.

Ten inequalities are probed empirically: the real forms for Lplus/Lminus
(plain and localized inside r1 / outside r2), their complex analogues at a
phase-rotated rescaled bubble, and the two-bubble sandwich for the full
second variation of the energy.  Each probe draws random band-limited
fields, removes the stated spectral directions by exact projection in the
grid inner product, and reports the minimum of (quadratic form)/|grad g|^2
over the samples; coercivity means that minimum is strictly positive.
The constants are reported, never assumed.
"""
from __future__ import annotations

import numpy as np

from . import bubble
from .fields import ComplexRadialField, ScalePhase
from .grid import RadialGrid, gauss_grid
from .spectral import AlphaFunctional, EigenPair

FORM_IDS = ("Lp", "Lm", "Lp_r1", "Lm_r1", "Lp_r2", "Lm_r2",
            "L_complex", "L_complex_r1", "L_complex_r2", "two_bubble")


def split_gradient_sq(grid: RadialGrid, values, r_split: float):
    """(inside, outside) parts of the discrete int |grad u|^2 at r_split."""
    rf, area, h = grid._face_data()
    ue = np.array(values, copy=True)
    ue[-1] = 0.0
    contrib = (area * h) * np.abs(np.diff(ue) / h) ** 2
    inside = rf <= r_split
    return float(contrib[inside].sum()), float(contrib[~inside].sum())


def project_out(grid: RadialGrid, values, constraints):
    """Remove the span of the constraint fields in the real grid pairing."""
    if not constraints:
        return values
    cons = [np.asarray(c, dtype=complex) for c in constraints]
    gram = np.array([[grid.pair(a, b) for b in cons] for a in cons])
    rhs = np.array([grid.pair(a, values) for a in cons])
    beta = np.linalg.solve(gram, rhs)
    out = np.asarray(values, dtype=complex).copy()
    for b, c in zip(beta, cons):
        out -= b * c
    return out


def _bubble_fields(grid: RadialGrid, sp: ScalePhase):
    n = grid.n
    amp = np.exp(1j * sp.theta) * sp.lam ** (-(n - 2) / 2.0)
    w = amp * bubble.ground_state(n, grid.nodes / sp.lam)
    lw = amp * bubble.scaling_derivative(n, grid.nodes / sp.lam)
    return w, lw


def _random_bumps(grid: RadialGrid, rng, complex_valued, n_bumps, r_range):
    r = grid.nodes
    lo, hi = np.log(r_range[0]), np.log(r_range[1])
    vals = np.zeros(grid.size, dtype=complex)
    for rho in np.exp(rng.uniform(lo, hi, n_bumps)):
        c = rng.standard_normal() + (1j * rng.standard_normal() if complex_valued else 0.0)
        vals += c * np.exp(-(((r - rho) / (0.6 * rho)) ** 2))
    vals[-1] = 0.0
    return vals


def coercivity_probe(form_id: str, grid: RadialGrid, pair: EigenPair,
                     samples: int = 1000, seed: int = 0, c_loc: float = 0.05,
                     r1: float = 150.0, r2: float = 0.05, sep: float = 0.05,
                     sp: ScalePhase | None = None) -> dict:
    """Empirical coercivity constant of one quadratic-form inequality.

    Returns {form_id, samples, empirical_c, min_ratio, max_ratio,
    violations, seed}.  ``empirical_c`` is the minimum over samples of
    (form)/|grad g|^2 after the form's constraints are projected out
    exactly.  For the two-bubble sandwich both min and max matter.
    """
    if form_id not in FORM_IDS:
        raise ValueError(f"unknown form_id {form_id!r}")
    if samples < 1000:
        raise ValueError("samples must be at least 1000")
    n = grid.n
    rng = np.random.default_rng(seed)
    r = grid.nodes
    s1, s2 = pair.splines()
    wv = bubble.ground_state(n, r)
    lwv = bubble.scaling_derivative(n, r)
    complex_valued = form_id.startswith("L_complex") or form_id == "two_bubble"

    if form_id.startswith("Lp"):
        constraints = [wv.astype(complex), s2(r).astype(complex)]
        potv = -(n + 2.0) / (n - 2.0) * wv ** (4.0 / (n - 2.0))
    elif form_id.startswith("Lm"):
        constraints = [lwv.astype(complex)]
        potv = -wv ** (4.0 / (n - 2.0))
    elif form_id.startswith("L_complex"):
        sp = sp or ScalePhase(0.3, 1.0)
        wl, lwl = _bubble_fields(grid, sp)
        a_p = AlphaFunctional(+1, sp, pair).sample(r)
        a_m = AlphaFunctional(-1, sp, pair).sample(r)
        constraints = [wl / sp.lam ** 2, 1j * lwl / sp.lam ** 2, a_p, a_m]
        vfield = wl
    else:  # two_bubble
        zeta, mu, theta = -np.pi / 2, 1.0, 0.0
        lam = sep * mu
        b1, lw1 = _bubble_fields(grid, ScalePhase(zeta, mu))
        b2, lw2 = _bubble_fields(grid, ScalePhase(theta, lam))
        constraints = [1j * lw1, -b1, 1j * lw2, -b2]
        vfield = b1 + b2
        alphas = [AlphaFunctional(sgn, spp, pair)
                  for spp in (ScalePhase(zeta, mu), ScalePhase(theta, lam))
                  for sgn in (+1, -1)]
        alpha_samples = [a.sample(r) for a in alphas]

    ratios = np.empty(samples)
    r_bumps = (max(4 * r2 / 20.0, 2e-3), 4 * r1)
    for k in range(samples):
        g = _random_bumps(grid, rng, complex_valued, n_bumps=rng.integers(4, 17),
                          r_range=r_bumps)
        g = project_out(grid, g, constraints)
        if not complex_valued:
            g = np.real(g).astype(complex)
            g = project_out(grid, g, constraints)
        grad2 = grid.gradient_seminorm_sq(g)
        if grad2 <= 0:
            ratios[k] = np.inf
            continue
        if form_id in ("Lp", "Lm"):
            q = grad2 + grid.integrate(potv * np.abs(g) ** 2)
        elif form_id in ("Lp_r1", "Lm_r1"):
            gin, gout = split_gradient_sq(grid, g, r1)
            q = (1 - 2 * c_loc) * gin + c_loc * gout + grid.integrate(potv * np.abs(g) ** 2)
        elif form_id in ("Lp_r2", "Lm_r2"):
            gin, gout = split_gradient_sq(grid, g, r2)
            q = (1 - 2 * c_loc) * gout + c_loc * gin + grid.integrate(potv * np.abs(g) ** 2)
        elif form_id.startswith("L_complex"):
            fpg = grid.pair(g, bubble.nonlin_derivative(n, vfield, g))
            if form_id == "L_complex":
                q = grad2 - fpg
            elif form_id == "L_complex_r1":
                gin, gout = split_gradient_sq(grid, g, r1 * sp.lam)
                q = (1 - 2 * c_loc) * gin + c_loc * gout - fpg
            else:
                gin, gout = split_gradient_sq(grid, g, r2 * sp.lam)
                q = (1 - 2 * c_loc) * gout + c_loc * gin - fpg
        else:  # two_bubble sandwich
            fpg = grid.pair(g, bubble.nonlin_derivative(n, vfield, g))
            amps = [grid.pair(a, g) for a in alpha_samples]
            q = 0.5 * (grad2 - fpg) + 2.0 * float(np.sum(np.square(amps)))
        ratios[k] = q / grad2

    return {
        "form_id": form_id,
        "samples": int(samples),
        "seed": int(seed),
        "empirical_c": float(np.min(ratios)),
        "min_ratio": float(np.min(ratios)),
        "max_ratio": float(np.max(ratios)),
        "violations": int(np.count_nonzero(ratios <= 0)),
    }


# -- two-bubble energy expansion ------------------------------------------------


def _two_bubble_profile(n, r, zeta, mu, theta, lam):
    """Values and radial derivative of e^{i zeta} W_mu + e^{i theta} W_lam."""
    a1 = np.exp(1j * zeta) * mu ** (-(n - 2) / 2.0)
    a2 = np.exp(1j * theta) * lam ** (-(n - 2) / 2.0)
    vals = a1 * bubble.ground_state(n, r / mu) + a2 * bubble.ground_state(n, r / lam)
    dvals = a1 / mu * bubble.ground_state_dr(n, r / mu) \
        + a2 / lam * bubble.ground_state_dr(n, r / lam)
    return vals, dvals


def two_bubble_energy(n: int, zeta: float, mu: float, theta: float, lam: float,
                      grid: RadialGrid | None = None) -> float:
    """E(e^{i zeta} W_mu + e^{i theta} W_lam) by spectral quadrature."""
    grid = grid or gauss_grid(n)
    vals, dvals = _two_bubble_profile(n, grid.nodes, zeta, mu, theta, lam)
    return bubble.profile_energy(grid, vals, dvals)


def energy_expansion_check(n: int, zeta: float = -np.pi / 2, mu: float = 1.0,
                           theta: float = 0.0, lams=(0.05, 0.025, 0.0125),
                           linear_trials: int = 20, seed: int = 0,
                           grid: RadialGrid | None = None) -> dict:
    """Measure the two-bubble energy expansion against its predicted leading term.

    E(sum) - 2E(W) has leading term intWpow * theta * lam^{(n-2)/2}; the
    remainder is bounded by C lam^{(n-2)/2}(|zeta+pi/2| + |mu-1| + |theta|^3
    + lam).  At the right-angle point the remainder must scale like lam^{n/2}
    as lam is halved; the linear term is probed against random profiles.
    """
    grid = grid or gauss_grid(n)
    consts = bubble.explicit_constants(n)
    e2w = 2.0 * consts["energy_W"]
    lead_coeff = consts["intWpow"]
    rem = {}
    for lam in lams:
        e = two_bubble_energy(n, zeta, mu, theta, lam, grid)
        rem[lam] = e - e2w - lead_coeff * theta * lam ** ((n - 2) / 2.0)
    ll = np.log(np.asarray(lams))
    lr = np.log(np.abs([rem[la] for la in lams]))
    slope = float(np.polyfit(ll, lr, 1)[0])

    # linear term: |<DE(sum), g>| <= C ||g||_E lam^{(n+2)/4}
    rng = np.random.default_rng(seed)
    r = grid.nodes
    linear = {}
    for lam in lams:
        vals, _ = _two_bubble_profile(n, r, zeta, mu, theta, lam)
        b1 = np.exp(1j * zeta) * mu ** (-(n - 2) / 2.0) * bubble.ground_state(n, r / mu)
        b2 = np.exp(1j * theta) * lam ** (-(n - 2) / 2.0) * bubble.ground_state(n, r / lam)
        de = -(bubble.nonlin(n, vals) - bubble.nonlin(n, b1) - bubble.nonlin(n, b2))
        worst = 0.0
        for _ in range(linear_trials):
            gv = np.zeros_like(r, dtype=complex)
            dgv = np.zeros_like(r, dtype=complex)
            for rho in np.exp(rng.uniform(np.log(5e-3), np.log(50.0), 8)):
                c = rng.standard_normal() + 1j * rng.standard_normal()
                s = 0.6 * rho
                e_b = np.exp(-(((r - rho) / s) ** 2))
                gv += c * e_b
                dgv += c * e_b * (-2.0 * (r - rho) / s ** 2)
            norm_e = np.sqrt(grid.integrate(np.abs(dgv) ** 2))
            val = abs(grid.pair(de, gv))
            worst = max(worst, val / (norm_e * lam ** ((n + 2) / 4.0)))
        linear[lam] = worst

    return {
        "n": n,
        "zeta": zeta, "mu": mu, "theta": theta,
        "remainders": rem,
        "slope": slope,
        "expected_slope": n / 2.0,
        "linear_constants": linear,
    }
