"""Two-bubble modulation: decomposition, the parameter ODE system, the
reduced dynamics, and the shooting-cube demonstration.

A field near the two-bubble manifold is written as

    u = e^{i zeta} W_mu + e^{i theta} W_lambda + g,

where g is pinned down by four orthogonality conditions (pairings of g
against i e^{i zeta} Lam W_mu, -e^{i zeta} W_mu and the same at the second
bubble).  Differentiating those conditions along the flow produces a 4x4
linear system  M (mu^2 zeta', mu mu', lambda^2 theta', lambda lambda') = B
whose entries are explicit quadrature pairings; its leading behavior gives
the reduced ODEs

    lambda' = (2 kappa^{(n-4)/2}/(n-6)) lambda^{(n-4)/2},
    theta'  = -((n-2) kappa^{(n-4)/2}/(n-6)) theta lambda^{(n-6)/2},

with closed-form solution lambda(t) = kappa^{-1} (kappa |t|)^{-2/(n-6)},
plus the linear stable/unstable mode amplitudes a1+-' = +- nu a1+- and
a2+-' = +- (nu/lambda^2) a2+-.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import bubble
from .fields import ComplexRadialField, ScalePhase
from .grid import RadialGrid
from .spectral import AlphaFunctional, EigenPair

DEFAULT_SEPARATION = 0.2


class DecompositionError(RuntimeError):
    pass


class NonConvergenceError(DecompositionError):
    pass


class SeparationError(DecompositionError):
    pass


class JacobianError(DecompositionError):
    pass


@dataclass
class ModulationState:
    """The modulation quadruple (zeta, mu, theta, lam)."""

    zeta: float
    mu: float
    theta: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > 0):
            raise ValueError("scales mu and lam must be positive")

    def well_separated(self, eta: float = DEFAULT_SEPARATION) -> bool:
        return self.lam / self.mu <= eta

    def as_array(self):
        return np.array([self.zeta, self.mu, self.theta, self.lam])


@dataclass
class DecomposedSolution:
    state: ModulationState
    g: ComplexRadialField
    a1p: float
    a1m: float
    a2p: float
    a2m: float
    residuals: np.ndarray
    iterations: int


@dataclass
class ModulationMatrix:
    m: np.ndarray        # 4x4
    b: np.ndarray        # 4
    k: float
    diagnostics: dict = field(default_factory=dict)

    def dominance_margin(self) -> float:
        """min_i (|M_ii| - sum_{j != i} |M_ij|) / |M_ii|; > 0 means dominant."""
        margins = []
        for i in range(4):
            off = np.sum(np.abs(self.m[i])) - abs(self.m[i, i])
            margins.append((abs(self.m[i, i]) - off) / abs(self.m[i, i]))
        return float(min(margins))

    def solve_rates(self):
        """(zeta', mu', theta', lambda') given the current state scales."""
        return np.linalg.solve(self.m, self.b)


# -- bubble pair fields -------------------------------------------------------


def _pair_profiles(grid: RadialGrid, st: ModulationState):
    """Bubble fields and their scaling derivatives at both (phase, scale)."""
    n = grid.n
    r = grid.nodes
    out = {}
    for tag, theta, lam in (("1", st.zeta, st.mu), ("2", st.theta, st.lam)):
        amp = np.exp(1j * theta) * lam ** (-(n - 2) / 2.0)
        out["b" + tag] = amp * bubble.ground_state(n, r / lam)
        out["lw" + tag] = amp * bubble.scaling_derivative(n, r / lam)
        out["llw" + tag] = amp * bubble.double_scaling_derivative(n, r / lam)
    return out


def synthesize(grid: RadialGrid, st: ModulationState, g_values=None) -> ComplexRadialField:
    """u = e^{i zeta} W_mu + e^{i theta} W_lambda (+ g)."""
    p = _pair_profiles(grid, st)
    vals = p["b1"] + p["b2"]
    if g_values is not None:
        vals = vals + np.asarray(g_values, dtype=complex)
    return ComplexRadialField(grid, vals)


def orthogonality_vectors(grid: RadialGrid, st: ModulationState):
    """The four pairing vectors of the orthogonality conditions."""
    p = _pair_profiles(grid, st)
    return [1j * p["lw1"], -p["b1"], 1j * p["lw2"], -p["b2"]]


def orthogonality_residuals(grid: RadialGrid, st: ModulationState, u_values):
    p = _pair_profiles(grid, st)
    g = np.asarray(u_values, dtype=complex) - p["b1"] - p["b2"]
    vecs = [1j * p["lw1"], -p["b1"], 1j * p["lw2"], -p["b2"]]
    return np.array([grid.pair(v, g) for v in vecs]), g, p


def project_to_orthogonality(grid: RadialGrid, st: ModulationState, g_values):
    """Project g onto the subspace satisfying the orthogonality conditions."""
    from .coercivity import project_out

    return project_out(grid, np.asarray(g_values, dtype=complex),
                       orthogonality_vectors(grid, st))


# -- decomposition ------------------------------------------------------------


def _newton_jacobian(grid: RadialGrid, st: ModulationState, g, p):
    """Analytic Jacobian of the four residuals in (zeta, mu, theta, lam)."""
    b1, b2 = p["b1"], p["b2"]
    lw1, lw2 = p["lw1"], p["lw2"]
    llw1, llw2 = p["llw1"], p["llw2"]
    mu, lam = st.mu, st.lam
    # derivatives of the bubbles: d b/d theta = i b, d b/d lam = -(1/lam) lw
    dg = [-1j * b1, lw1 / mu, -1j * b2, lw2 / lam]   # dg/dp = -db/dp
    # derivatives of the pairing vectors
    dvec = {
        (0, 0): -lw1, (0, 1): -1j * llw1 / mu,
        (1, 0): -1j * b1, (1, 1): lw1 / mu,
        (2, 2): -lw2, (2, 3): -1j * llw2 / lam,
        (3, 2): -1j * b2, (3, 3): lw2 / lam,
    }
    vecs = [1j * lw1, -b1, 1j * lw2, -b2]
    jac = np.zeros((4, 4))
    for j in range(4):
        for k in range(4):
            val = grid.pair(vecs[j], dg[k])
            if (j, k) in dvec:
                val += grid.pair(dvec[(j, k)], g)
            jac[j, k] = val
    return jac


def decompose(u: ComplexRadialField, guess: ModulationState,
              pair: EigenPair | None = None, eta: float = DEFAULT_SEPARATION,
              tol: float = 1e-11, max_iter: int = 50) -> DecomposedSolution:
    """Newton solve of the four orthogonality conditions for (zeta, mu, theta, lam).

    The returned state keeps the bubble ordering lam < mu; the remainder g
    and its four mode amplitudes are computed at the converged state.
    Raises NonConvergenceError / SeparationError / JacobianError.
    """
    grid = u.grid
    n = grid.n
    scale = bubble.explicit_constants(n)["wL2sq"]
    p = np.array([guess.zeta, guess.mu, guess.theta, guess.lam])
    res = None
    for it in range(max_iter):
        st = ModulationState(*p)
        res, g, prof = orthogonality_residuals(grid, st, u.values)
        if np.max(np.abs(res)) <= tol * scale:
            break
        jac = _newton_jacobian(grid, st, g, prof)
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise JacobianError(f"singular modulation Jacobian: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise JacobianError("non-finite Newton step")
        # keep scales positive: damp steps that would cross zero
        damp = 1.0
        for idx in (1, 3):
            if step[idx] >= 0.8 * p[idx]:
                damp = min(damp, 0.5 * p[idx] / step[idx])
        p = p - damp * step
        if p[1] <= 0 or p[3] <= 0:
            raise NonConvergenceError("scale collapsed during Newton iteration")
    else:
        raise NonConvergenceError(
            f"decomposition did not converge in {max_iter} iterations "
            f"(residual {np.max(np.abs(res)):.2e})")

    if p[3] > p[1]:
        # swapped bubble roles: relabel so that lam < mu
        p = np.array([p[2], p[3], p[0], p[1]])
    st = ModulationState(*p)
    if not st.well_separated(eta):
        raise SeparationError(
            f"scale ratio {st.lam / st.mu:.3f} exceeds the separation bound {eta}")
    res, g, prof = orthogonality_residuals(grid, st, u.values)
    gf = ComplexRadialField(grid, g)
    a1p = a1m = a2p = a2m = float("nan")
    if pair is not None:
        a1p = AlphaFunctional(+1, ScalePhase(st.zeta, st.mu), pair).apply(gf)
        a1m = AlphaFunctional(-1, ScalePhase(st.zeta, st.mu), pair).apply(gf)
        a2p = AlphaFunctional(+1, ScalePhase(st.theta, st.lam), pair).apply(gf)
        a2m = AlphaFunctional(-1, ScalePhase(st.theta, st.lam), pair).apply(gf)
    return DecomposedSolution(state=st, g=gf, a1p=a1p, a1m=a1m, a2p=a2p, a2m=a2m,
                              residuals=res, iterations=it + 1)


def decompose_single(u: ComplexRadialField, theta0: float, lam0: float,
                     tol: float = 1e-11, max_iter: int = 50):
    """Fit a single bubble e^{i theta} W_lam to u via two orthogonality conditions.

    Used to track the scale of an isolated bubble, where the two-bubble
    ansatz is degenerate.  Returns (theta, lam, remainder norm).
    """
    grid = u.grid
    n = grid.n
    scale = bubble.explicit_constants(n)["wL2sq"]
    th, lam = theta0, lam0
    for _ in range(max_iter):
        amp = np.exp(1j * th) * lam ** (-(n - 2) / 2.0)
        b = amp * bubble.ground_state(n, grid.nodes / lam)
        lw = amp * bubble.scaling_derivative(n, grid.nodes / lam)
        llw = amp * bubble.double_scaling_derivative(n, grid.nodes / lam)
        g = u.values - b
        res = np.array([grid.pair(1j * lw, g), grid.pair(-b, g)])
        if np.max(np.abs(res)) <= tol * scale * lam ** 2:
            break
        jac = np.array([
            [grid.pair(-lw, g) + grid.pair(1j * lw, -1j * b),
             grid.pair(-1j * llw / lam, g) + grid.pair(1j * lw, lw / lam)],
            [grid.pair(-1j * b, g) + grid.pair(-b, -1j * b),
             grid.pair(lw / lam, g) + grid.pair(-b, lw / lam)],
        ])
        step = np.linalg.solve(jac, res)
        if abs(step[1]) > 0.5 * lam:
            step *= 0.5 * lam / abs(step[1])
        th, lam = th - step[0], lam - step[1]
        if lam <= 0:
            raise NonConvergenceError("scale collapsed in single-bubble fit")
    else:
        raise NonConvergenceError("single-bubble fit did not converge")
    amp = np.exp(1j * th) * lam ** (-(n - 2) / 2.0)
    gnorm = grid.norm_l2(u.values - amp * bubble.ground_state(n, grid.nodes / lam))
    return float(th), float(lam), float(gnorm)


def decomposed_from(grid: RadialGrid, st: ModulationState, g_values=None,
                    pair: EigenPair | None = None) -> DecomposedSolution:
    """Build a DecomposedSolution from known parameters and remainder.

    No Newton solve: for synthetic states (e.g. g identically zero) this
    keeps the remainder exact.
    """
    g = np.zeros(grid.size, dtype=complex) if g_values is None \
        else np.asarray(g_values, dtype=complex)
    u = synthesize(grid, st, g)
    res, _, _ = orthogonality_residuals(grid, st, u.values)
    gf = ComplexRadialField(grid, g)
    a1p = a1m = a2p = a2m = float("nan")
    if pair is not None:
        a1p = AlphaFunctional(+1, ScalePhase(st.zeta, st.mu), pair).apply(gf)
        a1m = AlphaFunctional(-1, ScalePhase(st.zeta, st.mu), pair).apply(gf)
        a2p = AlphaFunctional(+1, ScalePhase(st.theta, st.lam), pair).apply(gf)
        a2m = AlphaFunctional(-1, ScalePhase(st.theta, st.lam), pair).apply(gf)
    return DecomposedSolution(state=st, g=gf, a1p=a1p, a1m=a1m, a2p=a2p, a2m=a2m,
                              residuals=res, iterations=0)


# -- the modulation linear system ----------------------------------------------


def assemble_mod_system(d: DecomposedSolution) -> ModulationMatrix:
    """All 16 matrix entries, the 4 forcing terms and K, by quadrature.

    Entries follow the time-differentiated orthogonality conditions; the
    forcing uses the kernel-reduced forms (no discrete Laplacian of g
    enters).  Predicted leading magnitudes are attached as diagnostics,
    as measurements rather than assertions.
    """
    grid = d.g.grid
    n = grid.n
    st = d.state
    g = d.g.values
    p = _pair_profiles(grid, st)
    b1, b2, lw1, lw2 = p["b1"], p["b2"], p["lw1"], p["lw2"]
    llw1, llw2 = p["llw1"], p["llw2"]
    mu2, lam2 = st.mu ** 2, st.lam ** 2
    pr = grid.pair

    m = np.empty((4, 4))
    m[0, 0] = (-pr(1j * lw1, 1j * b1) - pr(lw1, g)) / mu2
    m[0, 1] = (pr(1j * lw1, lw1) - pr(1j * llw1, g)) / mu2
    m[0, 2] = pr(1j * lw1, -1j * b2) / lam2
    m[0, 3] = pr(1j * lw1, lw2) / lam2
    m[1, 0] = (pr(b1, 1j * b1) - pr(1j * b1, g)) / mu2
    m[1, 1] = (-pr(b1, lw1) + pr(lw1, g)) / mu2
    m[1, 2] = pr(b1, 1j * b2) / lam2
    m[1, 3] = pr(-b1, lw2) / lam2
    m[2, 0] = pr(1j * lw2, -1j * b1) / mu2
    m[2, 1] = pr(1j * lw2, lw1) / mu2
    m[2, 2] = (-pr(1j * lw2, 1j * b2) - pr(lw2, g)) / lam2
    m[2, 3] = (pr(1j * lw2, lw2) - pr(1j * llw2, g)) / lam2
    m[3, 0] = pr(b2, 1j * b1) / mu2
    m[3, 1] = -pr(b2, lw1) / mu2
    m[3, 2] = (pr(b2, 1j * b2) - pr(1j * b2, g)) / lam2
    m[3, 3] = (-pr(b2, lw2) + pr(lw2, g)) / lam2

    u = b1 + b2 + g
    fu = bubble.nonlin(n, u)
    f1, f2, f12 = bubble.nonlin(n, b1), bubble.nonlin(n, b2), bubble.nonlin(n, b1 + b2)
    combo1 = fu - f1 - f2 - bubble.nonlin_derivative(n, b1, g)
    combo2 = fu - f1 - f2 - bubble.nonlin_derivative(n, b2, g)
    b = np.array([
        -pr(lw1, combo1),
        pr(b1, 1j * combo1),
        -pr(lw2, combo2),
        pr(b2, 1j * combo2),
    ])
    k = -pr(lw2, fu - f12 - bubble.nonlin_derivative(n, b1 + b2, g))

    consts = bubble.explicit_constants(n)
    kap = consts["kappa"]
    b4_pred = 2.0 * kap ** ((n - 4) / 2.0) * consts["wL2sq"] / (n - 6.0) \
        * st.lam ** ((n - 2) / 2.0)
    b3_pred = k - (n - 2.0) * kap ** ((n - 4) / 2.0) * consts["wL2sq"] / (n - 6.0) \
        * st.theta * st.lam ** ((n - 2) / 2.0)
    diagnostics = {
        "wL2sq": consts["wL2sq"],
        "b4_pred_leading": b4_pred,
        "b4_over_pred": float(b[3] / b4_pred),
        "b3_pred_leading": b3_pred,
        "b1_scale": float(abs(b[0]) / st.lam ** ((n - 2) / 2.0)),
        "b2_scale": float(abs(b[1]) / st.lam ** ((n - 2) / 2.0)),
    }
    return ModulationMatrix(m=m, b=b, k=float(k), diagnostics=diagnostics)


# -- reduced dynamics -----------------------------------------------------------


@dataclass
class ReducedState:
    """State of the reduced parameter model at a (negative) time."""

    t: float
    lam: float
    theta: float = 0.0
    a1p: float = 0.0
    a1m: float = 0.0
    a2p: float = 0.0
    a2m: float = 0.0

    def __post_init__(self):
        if not self.t < 0:
            raise ValueError("reduced model runs at negative times")
        if not self.lam > 0:
            raise ValueError("lam must be positive")


def closed_form_lambda(n: int, t):
    """lambda(t) = kappa^{-1} (kappa |t|)^{-2/(n-6)} for t < 0."""
    kap = bubble.kappa(n)
    return (1.0 / kap) * (kap * np.abs(t)) ** (-2.0 / (n - 6.0))


def reduced_rhs(n: int, s: ReducedState, nu: float) -> dict:
    """Time derivatives of the reduced model (K set to zero)."""
    if not s.lam > 0:
        raise ValueError("lam must be positive")
    kap = bubble.kappa(n)
    c = kap ** ((n - 4) / 2.0) / (n - 6.0)
    return {
        "lam": 2.0 * c * s.lam ** ((n - 4) / 2.0),
        "theta": -(n - 2.0) * c * s.theta * s.lam ** ((n - 6) / 2.0),
        "a1p": nu * s.a1p,
        "a1m": -nu * s.a1m,
        "a2p": nu / s.lam ** 2 * s.a2p,
        "a2m": -nu / s.lam ** 2 * s.a2m,
    }


@dataclass
class ReducedTrajectory:
    t: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    a1p: np.ndarray
    a1m: np.ndarray
    a2p: np.ndarray
    a2m: np.ndarray
    nu: float
    n: int


def integrate_reduced(n: int, s0: ReducedState, t_end: float, nu: float = 0.0,
                      rtol: float = 1e-10, t_eval=None) -> ReducedTrajectory:
    """Adaptive integration of the reduced model with dense output.

    The a2 modes carry the stiff rate nu/lambda^2; they are reconstructed
    from the accumulated exponent int nu/lambda^2 dt (equivalent to
    integrating them in the rescaled time ds = dt/lambda^2), which removes
    the stiffness without changing the trajectory.
    """
    if not (s0.t < t_end < 0):
        raise ValueError("need t0 < t_end < 0")
    kap = bubble.kappa(n)
    c = kap ** ((n - 4) / 2.0) / (n - 6.0)

    def rhs(t, y):
        lam, theta, e2 = y
        return [2.0 * c * lam ** ((n - 4) / 2.0),
                -(n - 2.0) * c * theta * lam ** ((n - 6) / 2.0),
                nu / lam ** 2]

    if t_eval is None:
        t_eval = np.linspace(s0.t, t_end, 201)
    sol = solve_ivp(rhs, (s0.t, t_end), [s0.lam, s0.theta, 0.0], method="DOP853",
                    rtol=rtol, atol=1e-30, t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"reduced integration failed: {sol.message}")
    lam, theta, e2 = sol.y
    t = sol.t

    def mode(a0, sign, rate_exp):
        if a0 == 0.0:
            return np.zeros_like(t)
        with np.errstate(over="raise"):
            try:
                return a0 * np.exp(sign * rate_exp)
            except FloatingPointError as exc:
                raise RuntimeError(
                    "unstable-mode amplitude overflow; shorten the window") from exc

    a1_exp = nu * (t - s0.t)
    return ReducedTrajectory(
        t=t, lam=lam, theta=theta,
        a1p=mode(s0.a1p, +1.0, a1_exp), a1m=mode(s0.a1m, -1.0, a1_exp),
        a2p=mode(s0.a2p, +1.0, e2), a2m=mode(s0.a2m, -1.0, e2),
        nu=nu, n=n)


# -- shooting cube ----------------------------------------------------------------


def cube_coordinates(n: int, t: float, lam: float, a1p: float, a2p: float):
    """p = X_t^{-1}(lambda, a1+, a2+) normalizing the shooting deviations."""
    at = np.abs(t)
    p0 = (lam - closed_form_lambda(n, t)) / at ** (-5.0 / (2 * (n - 6)))
    scale = at ** (-n / (2.0 * (n - 6)))
    return np.array([p0, a1p / scale, a2p / scale])


def cube_rhs(n: int, t: float, p, nu: float):
    """Reduced cube flow (error terms set to zero).

    p0' = (2n-13)/(2(n-6)) |t|^-1 p0,  p1' = nu p1,  p2' = (nu/lambda) p2,
    with lambda reconstructed from p0 through the normalization map.
    """
    at = abs(t)
    lam = closed_form_lambda(n, t) + p[0] * at ** (-5.0 / (2 * (n - 6)))
    return np.array([
        (2 * n - 13.0) / (2.0 * (n - 6)) / at * p[0],
        nu * p[1],
        nu / lam * p[2],
    ])


def shooting_demo(n: int, t_start: float, t_end: float, starts, nu: float,
                  rtol: float = 1e-10) -> list[dict]:
    """Integrate cube starts and report exits through the boundary of Q.

    Q = [-1/2, 1/2]^3.  Starts on the boundary exit immediately at
    themselves (the retraction fixes the boundary).  For each trajectory
    the repulsivity property is checked at every recorded step: once
    |p_j| >= 1/4, sign(p_j') = sign(p_j).
    """
    if not (t_start < t_end < 0):
        raise ValueError("need t_start < t_end < 0")
    reports = []
    for p0 in starts:
        p0 = np.asarray(p0, dtype=float)
        rep = {"start": p0.tolist(), "exited": False, "exit_face": None,
               "exit_time": None, "repulsive_ok": True}
        if np.max(np.abs(p0)) >= 0.5:
            j = int(np.argmax(np.abs(p0)))
            rep.update(exited=True, exit_time=t_start,
                       exit_face=f"p{j}{'+' if p0[j] > 0 else '-'}")
            reports.append(rep)
            continue

        events = []
        for j in range(3):
            for sgn in (+1.0, -1.0):
                def ev(t, p, j=j, sgn=sgn):
                    return p[j] - sgn * 0.5
                ev.terminal = True
                events.append(ev)

        sol = solve_ivp(lambda t, p: cube_rhs(n, t, p, nu), (t_start, t_end), p0,
                        method="DOP853", rtol=rtol, atol=1e-14, events=events,
                        max_step=abs(t_end - t_start) / 50)
        # repulsivity along the recorded trajectory
        for tt, pp in zip(sol.t, sol.y.T):
            dp = cube_rhs(n, tt, pp, nu)
            for j in range(3):
                if abs(pp[j]) >= 0.25 and np.sign(dp[j]) != np.sign(pp[j]):
                    rep["repulsive_ok"] = False
        hit = [k for k, te in enumerate(sol.t_events) if te.size > 0]
        if hit:
            k = hit[0]
            rep.update(exited=True, exit_time=float(sol.t_events[k][0]),
                       exit_face=f"p{k // 2}{'+' if k % 2 == 0 else '-'}")
        reports.append(rep)
    return reports
