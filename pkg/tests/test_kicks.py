import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noisesync.kicks import (
    KickSchedule,
    apply_kick,
    circle_set,
    count_folds,
    evolve_kicked_set,
    kick_array,
    phase_difference_experiment,
    winding_number,
)
from noisesync.models import LandauStuartParams, LaserParams, State

pts = arrays(np.float64, st.tuples(st.integers(1, 30), st.just(3)), elements=st.floats(0.1, 3.0))


@given(pts, st.floats(-0.9, 0.9), st.integers(1, 6))
def test_kick_preserves_argument_and_n(P, a, k):
    X = P.copy()
    X[:, 1] *= np.where(np.arange(len(X)) % 2, -1, 1)
    Y, n = kick_array(X, KickSchedule(amplitude=a, angular_wavenumber=k))
    assert n == 0
    assert np.array_equal(np.arctan2(Y[:, 1], Y[:, 0]), np.arctan2(X[:, 1], X[:, 0])) or np.allclose(
        np.arctan2(Y[:, 1], Y[:, 0]), np.arctan2(X[:, 1], X[:, 0]), atol=1e-15)
    assert np.array_equal(Y[:, 2], X[:, 2])
    th = np.arctan2(X[:, 1], X[:, 0])
    assert np.allclose(np.hypot(Y[:, 0], Y[:, 1]), np.hypot(X[:, 0], X[:, 1]) * (1 + a * np.sin(k * th)))


def test_large_kick_is_clamped_with_warning():
    s = State.from_complex(1j)  # sin(4 * pi/2) = 0, so use wavenumber 1
    with pytest.warns(RuntimeWarning):
        out = apply_kick(s, KickSchedule(amplitude=-2.0, angular_wavenumber=1))
    assert abs(out.E) == pytest.approx(1e-9)
    assert math.atan2(out.e_im, out.e_re) == pytest.approx(math.pi / 2)


def test_additive_mode_and_kick_at_origin():
    X, _ = kick_array(np.array([[2.0, 0.0, 0.0]]), KickSchedule(amplitude=0.5, angular_wavenumber=1, mode="additive"))
    assert X[0, 0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        kick_array(np.zeros((1, 3)), KickSchedule())


def test_schedule_validation():
    with pytest.raises(ValueError):
        KickSchedule(times=(0.0, 0.0))
    with pytest.raises(ValueError):
        KickSchedule(mode="shear")


def test_fold_and_winding_counts_on_synthetic_curves():
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    circle = np.column_stack([np.cos(th), np.sin(th)])
    assert winding_number(circle) == 1 and count_folds(circle) == 0
    # arg runs backwards on two arcs: four turning points
    wiggle = th + 0.6 * np.sin(2 * th) * 2
    curve = np.column_stack([np.cos(wiggle), np.sin(wiggle)])
    assert winding_number(curve) == 1 and count_folds(curve) == 4
    off = circle + 5.0
    assert winding_number(off) == 0


def test_no_shear_means_no_folds():
    p = LaserParams(J=1.0, alpha=0.0)
    out = evolve_kicked_set(p, circle_set(1.0, 400), KickSchedule(times=(0.0,)), 0.3, [0.3])
    assert count_folds(out[0.3]) == 0
    assert out["clamped"] == 0


def test_shear_folds_the_image():
    p = LaserParams(J=1.0, alpha=2.0)
    out = evolve_kicked_set(p, circle_set(1.0, 2000), KickSchedule(times=(0.0,)), 1.0, [0.0, 1.0])
    assert count_folds(out[0.0]) == 0
    assert count_folds(out[1.0]) > 0


def test_detuned_kicks_rejected():
    with pytest.raises(ValueError):
        evolve_kicked_set(LaserParams(J=1.0, Delta=1.0), circle_set(1.0, 4), KickSchedule(), 1.0, [1.0])
    with pytest.raises(ValueError):
        evolve_kicked_set(LandauStuartParams(J=1.0, DeltaTilde=1.0), circle_set(1.0, 4), KickSchedule(), 1.0, [])


def test_phase_difference_settles_to_isochrone_offset():
    out = phase_difference_experiment(cases=(("laser", 0.0), ("landau_stuart", 3.0)), n_samples=200)
    t, d, psi = out["laser_alpha0"]
    assert d[-1] == pytest.approx(0.0, abs=1e-6) and psi == pytest.approx(0.0)
    t, d, psi = out["landau_stuart_alpha3"]
    assert d[-1] == pytest.approx(psi, abs=1e-4)
    assert psi == pytest.approx(-3.0 * math.log(0.5))
