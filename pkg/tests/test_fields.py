import numpy as np
import pytest

from bubblelab import bubble
from bubblelab.fields import (ComplexRadialField, ScalePhase, ScaleRangeError,
                              field_from_profile, rescale)
from bubblelab.grid import geometric_grid


def test_scale_phase_contract():
    with pytest.raises(ValueError):
        ScalePhase(0.0, -1.0)
    with pytest.raises(ValueError):
        ScalePhase(0.0, 0.0)


def test_field_validation(mesh7):
    with pytest.raises(ValueError):
        ComplexRadialField(mesh7, np.ones(3))
    bad = np.ones(mesh7.size, dtype=complex)
    bad[5] = np.nan
    with pytest.raises(ValueError):
        ComplexRadialField(mesh7, bad)


def test_grid_mismatch_rejected(mesh7):
    other = geometric_grid(7, r_max=500.0, r_cell=1e-3, per_decade=160)
    a = ComplexRadialField(mesh7, np.ones(mesh7.size))
    b = ComplexRadialField(other, np.ones(other.size))
    with pytest.raises(ValueError):
        _ = a + b


def test_rescale_l2_scaling(mesh7):
    # ||u_lam||_L2^2 = lam^2 ||u||_L2^2 up to interpolation/truncation error
    w = field_from_profile(mesh7, lambda r: bubble.ground_state(7, r))
    for lam in (0.5, 2.0):
        got = rescale(w, ScalePhase(0.0, lam)).norm_l2() ** 2
        want = lam ** 2 * w.norm_l2() ** 2
        assert abs(got - want) / want < 5e-5


def test_rescale_out_of_range(mesh7):
    w = field_from_profile(mesh7, lambda r: bubble.ground_state(7, r))
    with pytest.raises(ScaleRangeError):
        rescale(w, ScalePhase(0.0, 1e-6))
    with pytest.raises(ScaleRangeError):
        rescale(w, ScalePhase(0.0, mesh7.r_max))


def test_resample_roundtrip(mesh7):
    fine = geometric_grid(7, r_max=1000.0, r_cell=5e-4, per_decade=640)
    w = field_from_profile(mesh7, lambda r: bubble.ground_state(7, r))
    back = w.resample(fine).resample(mesh7)
    assert (back - w).norm_l2() / w.norm_l2() < 1e-8


def test_field_from_profile_rescale_matches_spline_rescale(mesh7):
    # upscaling needs no data past r_max: pure interpolation error
    exact = field_from_profile(mesh7, lambda r: bubble.ground_state(7, r),
                               ScalePhase(0.7, 2.0))
    interp = rescale(field_from_profile(mesh7, lambda r: bubble.ground_state(7, r)),
                     ScalePhase(0.7, 2.0))
    assert (exact - interp).norm_l2() / exact.norm_l2() < 1e-8
    # downscaling clips the (tiny) tail past r_max; compare inside r_max/2
    exact = field_from_profile(mesh7, lambda r: bubble.ground_state(7, r),
                               ScalePhase(0.7, 0.5))
    interp = rescale(field_from_profile(mesh7, lambda r: bubble.ground_state(7, r)),
                     ScalePhase(0.7, 0.5))
    sel = mesh7.nodes <= mesh7.r_max / 2
    num = np.sqrt(np.sum(mesh7.weights[sel] * np.abs(exact.values - interp.values)[sel] ** 2))
    assert num / exact.norm_l2() < 1e-8
