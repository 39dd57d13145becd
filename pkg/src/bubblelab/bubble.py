"""Closed-form bubble calculus: the ground state, nonlinearity, energies,
and the explicit constants of the construction.

The ground state is W(r) = (1 + r^2/(n(n-2)))^{-(n-2)/2}, the unique radial
solution of -Delta u = |u|^{4/(n-2)} u up to phase and scale.  The scaling
generator acting on profiles is Lam = (n-2)/2 + r d/dr, fixed by
<-Lam W, W> = ||W||_{L2}^2.  All derivatives here are closed forms, never
numerical differentiation.
"""
from __future__ import annotations

import numpy as np
from scipy.special import beta as _beta

from .fields import ComplexRadialField
from .grid import RadialGrid, check_dimension, sphere_area


# -- ground-state profiles ----------------------------------------------


def ground_state(n: int, r):
    """W(r) = (1 + r^2/(n(n-2)))^{-(n-2)/2}; values in (0, 1]."""
    a = n * (n - 2.0)
    return (1.0 + np.square(r) / a) ** (-(n - 2.0) / 2.0)


def ground_state_dr(n: int, r):
    a = n * (n - 2.0)
    return -(n - 2.0) / a * np.asarray(r) * (1.0 + np.square(r) / a) ** (-n / 2.0)


def ground_state_dr2(n: int, r):
    a = n * (n - 2.0)
    t = np.square(r) / a
    return -(n - 2.0) / a * (1.0 + t) ** (-n / 2.0 - 1.0) * (1.0 + (1.0 - n) * t)


def ground_state_asymptote(n: int, r):
    """Leading far-field behavior (n(n-2))^{(n-2)/2} r^{-(n-2)}."""
    return (n * (n - 2.0)) ** ((n - 2.0) / 2.0) * np.asarray(r, dtype=float) ** (-(n - 2.0))


def scaling_derivative(n: int, r):
    """Lam W = (n-2)/2 W + r W' (tangent to the scaling family at W)."""
    return (n - 2.0) / 2.0 * ground_state(n, r) + np.asarray(r) * ground_state_dr(n, r)


def scaling_derivative_dr(n: int, r):
    return n / 2.0 * ground_state_dr(n, r) + np.asarray(r) * ground_state_dr2(n, r)


def double_scaling_derivative(n: int, r):
    """Lam(Lam W), needed for modulation Jacobians."""
    return (n - 2.0) / 2.0 * scaling_derivative(n, r) + np.asarray(r) * scaling_derivative_dr(n, r)


# -- nonlinearity --------------------------------------------------------


def nonlin(n: int, u):
    """f(u) = |u|^{4/(n-2)} u."""
    return np.abs(u) ** (4.0 / (n - 2.0)) * u


def nonlin_potential(n: int, u):
    """F(u) = (n-2)/(2n) |u|^{2n/(n-2)}, the potential-energy density."""
    return (n - 2.0) / (2.0 * n) * np.abs(u) ** (2.0 * n / (n - 2.0))


def nonlin_derivative(n: int, u, g):
    """The R-linear derivative f'(u) g, with the convention f'(0) g = 0."""
    u = np.asarray(u, dtype=complex)
    g = np.asarray(g, dtype=complex)
    p = 4.0 / (n - 2.0)
    au2 = np.real(u) ** 2 + np.imag(u) ** 2
    # guard subnormal magnitudes as well: 1/au2 must not overflow
    live = au2 > 1e-280
    safe = np.where(live, au2, 1.0)
    out = safe ** (p / 2.0) * (g + p * u * np.real(np.conj(u) * g) / safe)
    return np.where(live, out, 0.0 + 0.0j)


def nonlin_derivative_norm(n: int, u):
    """|f'(u)| = (n+2)/(n-2) |u|^{4/(n-2)} (operator norm of the map g -> f'(u)g)."""
    return (n + 2.0) / (n - 2.0) * np.abs(u) ** (4.0 / (n - 2.0))


def _fprime_matrices(n: int, z):
    """Real 2x2 matrix of f'(z) acting on C = R^2, batched over z."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    p = 4.0 / (n - 2.0)
    az = np.abs(z)
    m = np.zeros(z.shape + (2, 2))
    nz = az > 0.0
    c, s = np.real(z[nz]) / az[nz], np.imag(z[nz]) / az[nz]
    amp = az[nz] ** p
    m[nz, 0, 0] = amp * (1.0 + p * c * c)
    m[nz, 0, 1] = amp * p * c * s
    m[nz, 1, 0] = amp * p * s * c
    m[nz, 1, 1] = amp * (1.0 + p * s * s)
    return m


def fprime_diff_opnorm(n: int, z1, z2):
    """Operator norm of f'(z1+z2) - f'(z1) as an R-linear map on C."""
    d = _fprime_matrices(n, np.asarray(z1) + np.asarray(z2)) - _fprime_matrices(n, z1)
    return np.linalg.svd(d, compute_uv=False)[..., 0]


# -- energies ------------------------------------------------------------


def energy(u: ComplexRadialField) -> float:
    """Discrete energy E(u) = int 1/2 |grad u|^2 - F(u) dx."""
    kin = 0.5 * u.grid.gradient_seminorm_sq(u.values)
    pot = u.grid.integrate(nonlin_potential(u.grid.n, u.values))
    return float(kin - np.real(pot))


def profile_energy(grid: RadialGrid, values, dvalues) -> float:
    """Energy from analytic radial derivative samples (any grid kind)."""
    kin = 0.5 * grid.integrate(np.abs(dvalues) ** 2)
    pot = grid.integrate(nonlin_potential(grid.n, values))
    return float(np.real(kin - pot))


# -- explicit constants ---------------------------------------------------


def kappa(n: int) -> float:
    """The rate constant ((n-6)/(n B((n-4)/2, n/2)))^{2/(n-4)}."""
    check_dimension(n)
    return float(((n - 6.0) / (n * _beta((n - 4.0) / 2.0, n / 2.0))) ** (2.0 / (n - 4.0)))


def explicit_constants(n: int) -> dict:
    """Closed-form integrals of the bubble, as integrals over R^n.

    Keys: wL2sq = int W^2, intWpow = int W^{(n+2)/(n-2)},
    intVplusLW = -(n+2)/(n-2) int W^{4/(n-2)} Lam W, gradWsq = int |grad W|^2,
    energy_W = E(W) = gradWsq/n, kappa.

    The Beta-function forms are per unit sphere measure; the returned values
    include the angular factor omega_{n-1} so they match the R^n quadrature.
    """
    check_dimension(n)
    om = sphere_area(n)
    a = n * (n - 2.0)
    wL2sq = om * 0.5 * a ** (n / 2.0) * _beta((n - 4.0) / 2.0, n / 2.0)
    intWpow = om * a ** (n / 2.0) / n
    intVplusLW = om * (n - 2.0) / (2.0 * n) * a ** (n / 2.0)
    gradWsq = om * 0.5 * a ** (n / 2.0) * _beta(n / 2.0, n / 2.0)
    return {
        "wL2sq": float(wL2sq),
        "intWpow": float(intWpow),
        "intVplusLW": float(intVplusLW),
        "gradWsq": float(gradWsq),
        "energy_W": float(gradWsq / n),
        "kappa": kappa(n),
    }


def verify_constants(n: int, grid: RadialGrid) -> dict:
    """Relative defects of the closed forms against grid quadrature."""
    r = grid.nodes
    w2 = grid.integrate(ground_state(n, r) ** 2)
    wp = grid.integrate(ground_state(n, r) ** ((n + 2.0) / (n - 2.0)))
    vlw = -(n + 2.0) / (n - 2.0) * grid.integrate(
        ground_state(n, r) ** (4.0 / (n - 2.0)) * scaling_derivative(n, r))
    gw = grid.integrate(ground_state_dr(n, r) ** 2)
    c = explicit_constants(n)
    kappa_quad = ((n - 6.0) * wp / (2.0 * w2)) ** (2.0 / (n - 4.0))
    return {
        "wL2sq": abs(w2 - c["wL2sq"]) / c["wL2sq"],
        "intWpow": abs(wp - c["intWpow"]) / c["intWpow"],
        "intVplusLW": abs(vlw - c["intVplusLW"]) / c["intVplusLW"],
        "gradWsq": abs(gw - c["gradWsq"]) / c["gradWsq"],
        "kappa": abs(kappa_quad - c["kappa"]) / c["kappa"],
    }


# -- pointwise nonlinearity bounds ----------------------------------------

POINTWISE_BOUND_IDS = ("fp_vs_fp", "fp_vs_lin", "f_diff", "f_taylor_f",
                       "f_taylor_lin", "F_taylor1", "F_taylor2")


def _pointwise_ratios(n: int, z1, z2):
    """Ratios lhs/rhs of the pointwise nonlinearity bounds, batched."""
    p = 4.0 / (n - 2.0)
    gam = (n - 6.0) / (n - 2.0)
    a1, a2 = np.abs(z1), np.abs(z2)
    f1, f2, f12 = nonlin(n, z1), nonlin(n, z2), nonlin(n, z1 + z2)
    fp1g2 = nonlin_derivative(n, z1, z2)
    fpnorm = nonlin_derivative_norm
    dop = fprime_diff_opnorm(n, z1, z2)
    F1, F2, F12 = (nonlin_potential(n, z) for z in (z1, z2, z1 + z2))
    lin = np.real(np.conj(f1) * z2)
    # the quadratic Taylor term of F carries the factor 1/2
    quad = 0.5 * np.real(np.conj(fp1g2) * z2)
    out = {
        "fp_vs_fp": dop / fpnorm(n, z2),
        "fp_vs_lin": dop / (a1 ** (-gam) * a2),
        "f_diff": np.abs(f12 - f1) / (fpnorm(n, z1) * a2 + np.abs(f2)),
        "f_taylor_f": np.abs(f12 - f1 - fp1g2) / a2 ** ((n + 2.0) / (n - 2.0)),
        "f_taylor_lin": np.abs(f12 - f1 - fp1g2) / (a1 ** (-gam) * a2 ** 2),
        "F_taylor1": np.abs(F12 - F1 - lin) / (fpnorm(n, z1) * a2 ** 2 + F2),
        "F_taylor2": np.abs(F12 - F1 - lin - quad) / F2,
    }
    return out


def pointwise_suite(n: int, sample_count: int = 10000, seed: int = 0,
                    mag_range=(1e-3, 1e3)) -> dict:
    """Empirical suprema of the pointwise bound ratios over random pairs.

    Draws complex pairs with log-uniform magnitudes, splits them into two
    disjoint halves, and reports per-bound maxima for each half and overall.
    Ratios must come out finite and stable between the halves.
    """
    check_dimension(n)
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    rng = np.random.default_rng(seed)
    lo, hi = np.log(mag_range[0]), np.log(mag_range[1])

    def draw(k):
        mag = np.exp(rng.uniform(lo, hi, size=(2, k)))
        ph = rng.uniform(0.0, 2 * np.pi, size=(2, k))
        z = mag * np.exp(1j * ph)
        return z[0], z[1]

    halves = []
    for _ in range(2):
        z1, z2 = draw(sample_count // 2)
        halves.append({k: float(np.max(v)) for k, v in _pointwise_ratios(n, z1, z2).items()})
    report = {
        "n": n,
        "samples": sample_count,
        "seed": seed,
        "half_max": halves,
        "max": {k: max(halves[0][k], halves[1][k]) for k in halves[0]},
        "stable_x2": all(
            max(halves[0][k], halves[1][k]) <= 2.0 * min(halves[0][k], halves[1][k])
            for k in halves[0]
        ),
    }
    return report
