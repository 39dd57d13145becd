"""Truncated virial weights and the localized scaling operators built on them.

The weight q_{c,R} agrees with |x|^2/2 for r <= R, is constant far out, and
keeps its Hessian bounded below by -c and its bilaplacian below c/r^2
everywhere, with C^{3,1} regularity across the two splice radii.  The
construction starts from the explicit convex profile

    q0(r) = r^2/2                                   (r <= 1)
           = n(n-2) r /((n-1)(n-3)) - n/(2(n-4))
             + n/(2(n-3)(n-4) r^{n-4}) - 1/(2(n-1) r^{n-2})   (r >= 1),

whose derivatives match (1/2, 1, 1, 0) at r = 1 and whose bilaplacian is
-n(n-2)/r^3 < 0, and flattens it at a large radius r0 by the cutoff basis
e_j(x) = x^j chi(x)/j! with a smooth monotone step chi (identically 1 on
[0,1], 0 on [2, infinity), built from the exp(-1/s) mollifier).  r0 is
searched upward until the Hessian and bilaplacian bounds hold with margin.

From the weight, two first-order operators localize the scaling generators:

    A(lambda)  h = (n-2)/(2 n lambda^2) lapq(x/lambda) h + q'(x/lambda)/lambda d_r h,
    A0(lambda) h =        1/(2 lambda^2) lapq(x/lambda) h + q'(x/lambda)/lambda d_r h.

Where q is still quadratic they reduce exactly to lambda^{-2} Lam and
lambda^{-2} Lam0.  The discrete derivative inside A0 is assembled in skew
form, (P D - D^T_w P)/2 with P the multiplication by q'(r/lambda)/lambda,
so i A0 is symmetric to round-off and the quadratic form <g, i A0 g> that
corrects the phase is well-defined.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy import sparse
from scipy.special import expit

from . import bubble
from .fields import ComplexRadialField
from .grid import RadialGrid
from .spectral import apply_laplacian


# -- smooth cutoff ------------------------------------------------------------


def _chi_derivs(x):
    """chi and its first four derivatives; chi = 1 on x<=1, 0 on x>=2."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((5,) + x.shape)
    out[0] = np.where(x <= 1.0, 1.0, 0.0)
    mask = (x > 1.0) & (x < 2.0)
    if np.any(mask):
        a = x[mask] - 1.0
        b = 2.0 - x[mask]
        m = 1.0 / a - 1.0 / b
        m1 = -1.0 / a ** 2 - 1.0 / b ** 2
        m2 = 2.0 / a ** 3 - 2.0 / b ** 3
        m3 = -6.0 / a ** 4 - 6.0 / b ** 4
        m4 = 24.0 / a ** 5 - 24.0 / b ** 5
        s = expit(m)
        s1 = s * (1 - s)
        s2 = s1 * (1 - 2 * s)
        s3 = s2 * (1 - 2 * s) - 2 * s1 ** 2
        s4 = s3 * (1 - 2 * s) - 6 * s1 * s2
        out[0][mask] = s
        out[1][mask] = s1 * m1
        out[2][mask] = s2 * m1 ** 2 + s1 * m2
        out[3][mask] = s3 * m1 ** 3 + 3 * s2 * m1 * m2 + s1 * m3
        out[4][mask] = s4 * m1 ** 4 + 6 * s3 * m1 ** 2 * m2 + s2 * (3 * m2 ** 2 + 4 * m1 * m3) + s1 * m4
    return out


def _q0_derivs(n, r):
    """The convex base profile and derivatives up to fourth order."""
    r = np.asarray(r, dtype=float)
    c1 = n * (n - 2.0) / ((n - 1.0) * (n - 3.0))
    inner = r <= 1.0
    rs = np.where(inner, 1.0, r)   # avoid 0^negative; inner branch overrides
    q = np.where(inner, 0.5 * r ** 2,
                 c1 * rs - n / (2.0 * (n - 4.0))
                 + n / (2.0 * (n - 3.0) * (n - 4.0)) * rs ** (4.0 - n)
                 - 1.0 / (2.0 * (n - 1.0)) * rs ** (2.0 - n))
    q1 = np.where(inner, r,
                  c1 - n / (2.0 * (n - 3.0)) * rs ** (3.0 - n)
                  + (n - 2.0) / (2.0 * (n - 1.0)) * rs ** (1.0 - n))
    q2 = np.where(inner, 1.0, n / 2.0 * rs ** (2.0 - n) - (n - 2.0) / 2.0 * rs ** (-n))
    q3 = np.where(inner, 0.0, n * (n - 2.0) / 2.0 * (-rs ** (1.0 - n) + rs ** (-1.0 - n)))
    q4 = np.where(inner, 0.0,
                  n * (n - 2.0) / 2.0 * ((n - 1.0) * rs ** (-n) - (n + 1.0) * rs ** (-2.0 - n)))
    return np.stack([q, q1, q2, q3, q4])


@dataclass
class VirialWeight:
    """q_{c,R} with evaluators for q, q', q'', q''', lap q, lap^2 q."""

    n: int
    c: float
    big_r: float        # quadratic-core radius R
    r0: float           # splice radius of the unit-R profile
    _coeffs: tuple      # q0^{(j)}(r0) r0^j for j = 1..3, and q0(r0)

    @property
    def r_const(self) -> float:
        """q is constant for r >= this radius (= 3 r0 R)."""
        return 3.0 * self.r0 * self.big_r

    def _unit_derivs(self, y):
        y = np.asarray(y, dtype=float)
        out = _q0_derivs(self.n, y)
        mask = y >= self.r0
        if np.any(mask):
            q0r0, cj = self._coeffs[0], self._coeffs[1]
            x = -1.0 + y[mask] / self.r0
            ch = _chi_derivs(x)
            res = np.zeros((5, int(mask.sum())))
            res[0] = q0r0
            for j in (1, 2, 3):
                powd = np.zeros((5, int(mask.sum())))
                for k in range(j + 1):
                    powd[k] = factorial(j) // factorial(j - k) * x ** (j - k)
                for k in range(5):
                    ejk = sum(comb(k, i) * powd[i] * ch[k - i] for i in range(k + 1)) / factorial(j)
                    res[k] += cj[j - 1] * ejk * self.r0 ** (-k)
            out[:, mask] = res
        return out

    def derivs(self, r):
        """Stack (q, q', q'', q''') at radius r, with q_{c,R} = R^2 q(r/R)."""
        rr = np.asarray(r, dtype=float) / self.big_r
        u = self._unit_derivs(rr)
        scale = np.array([self.big_r ** 2, self.big_r, 1.0, 1.0 / self.big_r])
        return u[:4] * scale[:, None] if u.ndim == 2 else u[:4] * scale

    def q(self, r):
        return self.derivs(r)[0]

    def dq(self, r):
        return self.derivs(r)[1]

    def laplacian(self, r):
        d = self.derivs(r)
        rr = np.asarray(r, dtype=float)
        return d[2] + (self.n - 1.0) * np.where(rr > 0, d[1] / np.where(rr > 0, rr, 1.0), d[2])

    def bilaplacian(self, r):
        n = self.n
        rr = np.asarray(r, dtype=float) / self.big_r
        u = self._unit_derivs(rr)
        safe = np.where(rr > 0, rr, 1.0)
        val = (u[4] + 2.0 * (n - 1.0) * u[3] / safe
               + (n - 1.0) * (n - 3.0) * (u[2] / safe ** 2 - u[1] / safe ** 3))
        return np.where(rr > 0, val, 0.0) / self.big_r ** 2

    def property_report(self, samples: int = 20000) -> dict:
        """Sampled P1-P5 diagnostics on a dense log grid."""
        r = np.geomspace(1e-3 * self.big_r, 4.0 * self.r_const, samples)
        d = self.derivs(r)
        lap2 = self.bilaplacian(r)
        core = r <= self.big_r
        hess_min = float(min(d[2].min(), (d[1] / r).min()))
        return {
            "P1_core_defect": float(np.max(np.abs(d[0][core] - 0.5 * r[core] ** 2))
                                    / (0.5 * self.big_r ** 2)),
            "P2_tail_gradient": float(np.max(np.abs(d[1][r >= self.r_const]))),
            "P3_grad_over_r": float(np.max(np.abs(d[1]) / r)),
            "P3_max_lap": float(np.max(np.abs(self.laplacian(r)))),
            "P4_hessian_min": hess_min,
            "P5_max_r2_bilap": float(np.max(lap2 * r ** 2)),
        }


def build_q(n: int, c: float, big_r: float, margin: float = 2.0,
            samples: int = 20000, r0_cap: float = 1e9) -> VirialWeight:
    """Construct q_{c,R}, growing the splice radius until P4/P5 pass with margin."""
    if not (0.0 < c < 1.0):
        raise ValueError("c must lie in (0, 1)")
    if big_r <= 0:
        raise ValueError("R must be positive")
    r0 = max(10.0, 10.0 / c ** (1.0 / 3.0))
    while r0 <= r0_cap:
        qs = _q0_derivs(n, np.array([r0]))[:, 0]
        w = VirialWeight(n=n, c=c, big_r=big_r, r0=r0,
                         _coeffs=(qs[0], [qs[j] * r0 ** j for j in (1, 2, 3)]))
        rep = w.property_report(samples)
        if rep["P4_hessian_min"] >= -c / margin and rep["P5_max_r2_bilap"] <= c / margin:
            return w
        r0 *= 2.0
    raise RuntimeError(f"splice-radius search exhausted (c={c}, R={big_r})")


# -- the operators A(lambda), A0(lambda) ------------------------------------------


def _derivative_matrix(grid: RadialGrid):
    """Sparse 3-point d/dr on the full node set (parity at 0, one-sided at end)."""
    if "dmat" not in grid._faces:
        r = grid.nodes
        m = grid.size
        hm = r[1:-1] - r[:-2]
        hp = r[2:] - r[1:-1]
        idx = np.arange(1, m - 1)
        rows = np.concatenate([idx, idx, idx, [m - 1, m - 1]])
        cols = np.concatenate([idx - 1, idx, idx + 1, [m - 2, m - 1]])
        h_end = r[-1] - r[-2]
        vals = np.concatenate([
            -hp / (hm * (hm + hp)),
            (hp - hm) / (hm * hp),
            hm / (hp * (hm + hp)),
            [-1.0 / h_end, 1.0 / h_end],
        ])
        # row 0 absent: radial parity makes the derivative vanish at r = 0
        grid._faces["dmat"] = sparse.csr_matrix((vals, (rows, cols)), shape=(m, m))
    return grid._faces["dmat"]


def _skew_first_order(grid: RadialGrid, p_diag):
    """Apply the antisymmetrized operator (P D - D^T_w P)/2 to fields."""
    d = _derivative_matrix(grid)
    w = grid.weights

    def apply(values):
        v = np.asarray(values, dtype=complex)
        pv = p_diag * v
        term1 = p_diag * (d @ v)
        term2 = (d.T @ (w * pv)) / w
        return 0.5 * (term1 - term2)

    return apply


def apply_scaling_generator(grid: RadialGrid, values, order: int = 1):
    """Discrete Lam_s = (n-2s)/2 + r d/dr in skew form; order 1 gives Lam, 0 gives Lam0."""
    op = _skew_first_order(grid, grid.nodes.astype(float))
    base = op(values)          # skew form of Lam0 = n/2 + r d/dr
    return base - order * np.asarray(values, dtype=complex)


def apply_a0(weight: VirialWeight, lam: float, g: ComplexRadialField) -> ComplexRadialField:
    """A0(lambda) g, antisymmetric to round-off in the grid pairing."""
    grid = g.grid
    p = weight.dq(grid.nodes / lam) / lam
    out = _skew_first_order(grid, p)(g.values)
    return ComplexRadialField(grid, out)


def apply_a(weight: VirialWeight, lam: float, g: ComplexRadialField) -> ComplexRadialField:
    """A(lambda) g = A0(lambda) g - (1/n) lambda^{-2} lapq(x/lambda) g."""
    grid = g.grid
    a0 = apply_a0(weight, lam, g)
    corr = weight.laplacian(grid.nodes / lam) / (grid.n * lam ** 2)
    return ComplexRadialField(grid, a0.values - corr * g.values)


def a0_quadratic_form(weight: VirialWeight, lam: float, g: ComplexRadialField) -> float:
    """<g, i A0(lambda) g>; real because i A0 is symmetric."""
    return g.grid.pair(g.values, 1j * apply_a0(weight, lam, g).values)


def psi_value(decomposed, weight: VirialWeight) -> float:
    """Corrected phase theta - <g, i A0(lambda) g>/(2 ||W||^2)."""
    st = decomposed.state
    wl2 = bubble.explicit_constants(decomposed.g.grid.n)["wL2sq"]
    return float(st.theta - a0_quadratic_form(weight, st.lam, decomposed.g) / (2.0 * wl2))


# -- identity suite ----------------------------------------------------------------


def virial_identity_suite(weight: VirialWeight, grid: RadialGrid, trials: int = 100,
                          seed: int = 0, lam: float = 1.0, c0: float | None = None) -> dict:
    """Check the integral identities of A and A0 on random smooth fields.

    Reports worst relative defects of
      (i)   <A h, f(h)> = 0,
      (ii)  <A(lam) h1, f(h1+h2) - f(h1) - f'(h1) h2> = -<A(lam) h2, f(h1+h2) - f(h1)>,
      (iii) <h1, A0 h2> = -<A0 h1, h2>   (round-off; skew by construction),
    and the localized Pohozaev inequality
      <A0(lam) h, Delta h> <= (c0/lam^2)||h||_E^2 - (1/lam^2) int_{r<=R lam}|grad h|^2,
    with c0 defaulting to 1.5 c.
    """
    if trials < 100:
        raise ValueError("trials must be at least 100")
    from .coercivity import split_gradient_sq
    from .spectral import smooth_test_field

    n = grid.n
    rng = np.random.default_rng(seed)
    c0 = 1.5 * weight.c if c0 is None else c0
    rep = {"trials": trials, "seed": seed, "lam": lam, "c0": c0,
           "self_pairing": 0.0, "by_parts_2": 0.0, "by_parts": 0.0,
           "antisymmetry": 0.0, "pohozaev_margin": np.inf, "pohozaev_violations": 0}
    for _ in range(trials):
        h1 = smooth_test_field(grid, rng, r_range=(0.02, 30.0))
        h2 = smooth_test_field(grid, rng, r_range=(0.02, 30.0))
        ah1 = apply_a(weight, lam, h1)
        ah2 = apply_a(weight, lam, h2)
        f1 = bubble.nonlin(n, h1.values)
        f12 = bubble.nonlin(n, h1.values + h2.values)
        scale = ah1.norm_l2() * grid.norm_l2(f12) + ah2.norm_l2() * grid.norm_l2(f12)
        # (i) with h = h1
        v1 = abs(grid.pair(ah1.values, f1)) / max(ah1.norm_l2() * grid.norm_l2(f1), 1e-300)
        rep["by_parts_2"] = max(rep["by_parts_2"], v1)
        # (ii)
        lhs = grid.pair(ah1.values, f12 - f1 - bubble.nonlin_derivative(n, h1.values, h2.values))
        rhs = -grid.pair(ah2.values, f12 - f1)
        rep["by_parts"] = max(rep["by_parts"], abs(lhs - rhs) / max(scale, 1e-300))
        # (iii)
        a0h1 = apply_a0(weight, lam, h1)
        a0h2 = apply_a0(weight, lam, h2)
        anti = abs(grid.pair(h1.values, a0h2.values) + grid.pair(a0h1.values, h2.values))
        rep["antisymmetry"] = max(rep["antisymmetry"],
                                  anti / max(h1.norm_l2() * a0h2.norm_l2(), 1e-300))
        rep["self_pairing"] = max(rep["self_pairing"],
                                  abs(grid.pair(h1.values, a0h1.values))
                                  / max(h1.norm_l2() * a0h1.norm_l2(), 1e-300))
        # Pohozaev
        lap = apply_laplacian(grid, h1.values)
        lhs_p = grid.pair(a0h1.values, lap)
        he = grid.gradient_seminorm_sq(h1.values)
        gin, _ = split_gradient_sq(grid, h1.values, weight.big_r * lam)
        rhs_p = (c0 * he - gin) / lam ** 2
        rep["pohozaev_margin"] = min(rep["pohozaev_margin"],
                                     (rhs_p - lhs_p) / (he / lam ** 2))
        if lhs_p > rhs_p:
            rep["pohozaev_violations"] += 1
    return rep
