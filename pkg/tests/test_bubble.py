import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gamma

from bubblelab import bubble
from bubblelab.fields import ComplexRadialField, ScalePhase, field_from_profile, rescale
from bubblelab.grid import gauss_grid, sphere_area


def complex_nonzero(max_mag=1e3):
    mags = st.floats(min_value=1e-3, max_value=max_mag)
    phases = st.floats(min_value=0.0, max_value=2 * np.pi)
    return st.builds(lambda m, p: m * np.exp(1j * p), mags, phases)


# -- ground state ---------------------------------------------------------


def test_ground_state_values():
    assert bubble.ground_state(7, 0.0) == 1.0
    # r^2 = n(n-2) makes the base equal 2
    assert np.isclose(bubble.ground_state(7, np.sqrt(35.0)), 2.0 ** (-2.5), rtol=1e-14)
    vals = bubble.ground_state(7, np.linspace(0, 50, 400))
    assert np.all(np.diff(vals) < 0)
    assert np.all((vals > 0) & (vals <= 1))


def test_ground_state_asymptote():
    # leading far-field term; the first correction is -(n-2)a/(2 r^2) ~ 2.2%
    n, r = 9, 100.0
    got = bubble.ground_state(n, r)
    lead = bubble.ground_state_asymptote(n, r)
    assert abs(got - lead) / lead < 0.025
    a = n * (n - 2.0)
    two_term = lead * (1.0 - (n - 2.0) / 2.0 * a / r ** 2)
    assert abs(got - two_term) / two_term < 1e-3


@pytest.mark.parametrize("n", [7, 9])
def test_profile_derivatives_match_finite_differences(n):
    r = np.geomspace(0.01, 40.0, 25)
    h = 1e-6 * np.maximum(r, 1.0)
    for fn, dfn in [
        (bubble.ground_state, bubble.ground_state_dr),
        (bubble.ground_state_dr, bubble.ground_state_dr2),
        (bubble.scaling_derivative, bubble.scaling_derivative_dr),
    ]:
        fd = (fn(n, r + h) - fn(n, r - h)) / (2 * h)
        np.testing.assert_allclose(dfn(n, r), fd, rtol=1e-6, atol=1e-12)


def test_scaling_derivative_at_origin_and_sign_change():
    assert bubble.scaling_derivative(7, 0.0) == pytest.approx(2.5, abs=1e-15)
    # exactly one sign change at some r* > 0
    r = np.geomspace(1e-3, 1e3, 4000)
    signs = np.sign(bubble.scaling_derivative(7, r))
    assert np.count_nonzero(np.diff(signs) != 0) == 1
    rstar = brentq(lambda x: bubble.scaling_derivative(7, x), 1.0, 20.0)
    assert rstar > 0


def test_scaling_derivative_pairing(quad7):
    # <Lam W, W> = -||W||^2, both sides by quadrature
    r = quad7.nodes
    lhs = quad7.integrate(bubble.scaling_derivative(7, r) * bubble.ground_state(7, r))
    rhs = -quad7.integrate(bubble.ground_state(7, r) ** 2)
    assert abs(lhs - rhs) / abs(rhs) < 1e-8


def test_double_scaling_derivative_fd():
    # Lam(Lam W) against a finite-difference of Lam W along the scaling flow:
    # d/dmu [mu^{-(n-2)/2} (Lam W)(r/mu)] at mu=1 equals -(1/mu) Lam(Lam W)
    n, r = 7, np.geomspace(0.05, 30.0, 20)
    eps = 1e-6

    def family(mu):
        return mu ** (-(n - 2) / 2.0) * bubble.scaling_derivative(n, r / mu)

    fd = (family(1 + eps) - family(1 - eps)) / (2 * eps)
    np.testing.assert_allclose(-bubble.double_scaling_derivative(n, r), fd, rtol=1e-7)


# -- nonlinearity ----------------------------------------------------------


def test_nonlin_unit_values():
    for n in (7, 8, 11):
        assert bubble.nonlin(n, 1.0) == pytest.approx(1.0)
        assert bubble.nonlin(n, 1j) == pytest.approx(1j)


def test_nonlin_derivative_along_u():
    # f'(u) u = (n+2)/(n-2) f(u)
    n = 7
    assert bubble.nonlin_derivative(n, 1.0, 1.0) == pytest.approx((n + 2) / (n - 2))
    z = 0.3 - 1.7j
    np.testing.assert_allclose(
        bubble.nonlin_derivative(n, z, z),
        (n + 2) / (n - 2) * bubble.nonlin(n, z), rtol=1e-14)


def test_nonlin_derivative_zero_convention():
    assert bubble.nonlin_derivative(7, 0.0, 1.0 + 2.0j) == 0.0


@settings(max_examples=200, deadline=None)
@given(u=complex_nonzero(), g=complex_nonzero(), h=complex_nonzero())
def test_nonlin_derivative_symmetric(u, g, h):
    # Re(conj(h) f'(u) g) = Re(conj(g) f'(u) h)
    n = 7
    lhs = np.real(np.conj(h) * bubble.nonlin_derivative(n, u, g))
    rhs = np.real(np.conj(g) * bubble.nonlin_derivative(n, u, h))
    scale = bubble.nonlin_derivative_norm(n, u) * abs(g) * abs(h)
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_nonlin_derivative_symmetric_on_fields(mesh7, rng):
    n = 7
    r = mesh7.nodes
    u = bubble.ground_state(n, r) * np.exp(0.3j)
    g = np.exp(-((r - 2) ** 2)) + 1j * np.exp(-(r ** 2))
    h = np.exp(-((r - 0.5) ** 2) / 4) - 0.7j * np.exp(-((r - 5) ** 2))
    lhs = mesh7.pair(h, bubble.nonlin_derivative(n, u, g))
    rhs = mesh7.pair(g, bubble.nonlin_derivative(n, u, h))
    scale = mesh7.norm_l2(g) * mesh7.norm_l2(h)
    assert abs(lhs - rhs) <= 1e-12 * scale


# -- energy ----------------------------------------------------------------


def test_energy_zero(mesh7):
    assert bubble.energy(ComplexRadialField(mesh7, np.zeros(mesh7.size))) == 0.0


def test_energy_ground_state_pohozaev(quad7):
    # E(W) = (1/n) int |grad W|^2 = (1/n) int W^{2n/(n-2)}; two quadratures
    n, r = 7, quad7.nodes
    e_direct = bubble.profile_energy(quad7, bubble.ground_state(n, r),
                                     bubble.ground_state_dr(n, r))
    e_pohozaev = quad7.integrate(bubble.ground_state(n, r) ** (2.0 * n / (n - 2.0))) / n
    assert abs(e_direct - e_pohozaev) / abs(e_pohozaev) < 1e-8
    assert abs(e_direct - bubble.explicit_constants(n)["energy_W"]) / e_direct < 1e-8


def test_energy_scale_invariant(mesh7_fine):
    n = 7
    w = field_from_profile(mesh7_fine, lambda r: bubble.ground_state(n, r))
    e0 = bubble.energy(w)
    for lam in (0.25, 0.5, 2.0):
        wl = field_from_profile(mesh7_fine, lambda r: bubble.ground_state(n, r),
                                ScalePhase(0.0, lam))
        assert abs(bubble.energy(wl) - e0) / abs(e0) < 1e-6


def test_rescale_identity_phase_energy(mesh7, mesh7_fine):
    n = 7
    w = field_from_profile(mesh7, lambda r: bubble.ground_state(n, r))
    same = rescale(w, ScalePhase(0.0, 1.0))
    np.testing.assert_allclose(same.values, w.values, atol=1e-12)
    rot = rescale(w, ScalePhase(np.pi / 2, 1.0))
    np.testing.assert_allclose(rot.values, 1j * w.values, atol=1e-12)
    wf = field_from_profile(mesh7_fine, lambda r: bubble.ground_state(n, r))
    half = rescale(wf, ScalePhase(0.0, 0.5))
    assert abs(bubble.energy(half) - bubble.energy(wf)) / abs(bubble.energy(wf)) < 1e-6


# -- explicit constants ------------------------------------------------------


@pytest.mark.parametrize("n", [7, 8, 9, 11])
def test_explicit_constants_match_quadrature(n):
    g = gauss_grid(n)
    defects = bubble.verify_constants(n, g)
    for key, d in defects.items():
        assert d < 1e-8, (key, d)


def test_constants_against_adaptive_quadrature():
    # independent oracle: adaptive Gauss-Kronrod on the radial line
    for n in (7, 9):
        om = sphere_area(n)
        val, err = quad(lambda r: bubble.ground_state(n, r) ** 2 * r ** (n - 1),
                        0.0, np.inf, limit=400)
        assert err < 1e-7 * val
        c = bubble.explicit_constants(n)
        assert abs(om * val - c["wL2sq"]) / c["wL2sq"] < 1e-9


def test_kappa_value_n7():
    # (1/(7 B(3/2, 7/2)))^{2/3} with B from Gamma functions
    b = gamma(1.5) * gamma(3.5) / gamma(5.0)
    ref = (1.0 / (7.0 * b)) ** (2.0 / 3.0)
    assert bubble.kappa(7) == pytest.approx(ref, rel=1e-14)
    assert bubble.kappa(7) == pytest.approx(1.1066102835768201, rel=1e-12)


# -- pointwise bounds ---------------------------------------------------------


def test_pointwise_lhs_vanish_at_z2_zero():
    n, z1 = 7, 0.8 + 0.4j
    assert bubble.fprime_diff_opnorm(n, z1, 0.0) == 0.0
    assert bubble.nonlin(n, z1 + 0.0) - bubble.nonlin(n, z1) == 0.0
    f12 = bubble.nonlin(n, z1) - bubble.nonlin(n, z1) - bubble.nonlin_derivative(n, z1, 0.0)
    assert f12 == 0.0


def test_pointwise_z1_zero_branch():
    # |f(z2)| <= C f(|z2|) with C >= 1: ratio is exactly 1 at z1 = 0
    n, z2 = 7, 0.3 - 0.2j
    num = abs(bubble.nonlin(n, z2))
    den = abs(z2) ** ((n + 2.0) / (n - 2.0))
    assert num / den == pytest.approx(1.0, rel=1e-14)


def test_pointwise_suite_finite_and_stable():
    rep1 = bubble.pointwise_suite(7, sample_count=10000, seed=5)
    rep2 = bubble.pointwise_suite(7, sample_count=10000, seed=17)
    assert rep1["stable_x2"]
    for key in bubble.POINTWISE_BOUND_IDS:
        a, b = rep1["max"][key], rep2["max"][key]
        assert np.isfinite(a) and np.isfinite(b)
        assert max(a, b) <= 2.0 * min(a, b), key


def test_pointwise_suite_rejects_small_samples():
    with pytest.raises(ValueError):
        bubble.pointwise_suite(7, sample_count=10)
