import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisesync import _kernels as K
from noisesync.models import (
    BlowUpError,
    LandauStuartParams,
    LaserParams,
    State,
    drift,
    floquet_closed_form,
    isochrone_points,
    jacobian,
    on_cycle_state,
    params_from_dict,
    params_to_dict,
    phase_psi,
    reduce_to_landau_stuart,
    regime_boundaries,
    relaxation_rate,
    unwrapped_psi,
)

finite = st.floats(-3, 3, allow_nan=False)
alphas = st.floats(-6, 6, allow_nan=False)
pumps = st.floats(1e-3, 20, allow_nan=False)


def fd_jacobian(p, x, h=1e-6):
    n = len(x)
    Jm = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        Jm[:, k] = (drift(State.from_array(x + e), p)[:n] - drift(State.from_array(x - e), p)[:n]) / (2 * h)
    return Jm


@given(pumps, alphas, finite, finite, finite, st.floats(-5, 5))
def test_laser_jacobian_matches_finite_differences(J, alpha, x, y, n, delta):
    p = LaserParams(J=J, alpha=alpha, Delta=delta)
    X = np.array([x, y, n * 0.01])
    A = jacobian(State.from_array(X), p)
    B = fd_jacobian(p, X)
    assert np.allclose(A, B, rtol=1e-5, atol=1e-3)


@given(pumps, alphas, finite, finite, st.floats(-5, 5))
def test_ls_jacobian_matches_finite_differences(J, alpha, x, y, delta):
    p = LandauStuartParams(J=J, alpha=alpha, DeltaTilde=delta)
    X = np.array([x, y])
    A = jacobian(State.from_array(X), p)
    assert np.allclose(A, fd_jacobian(p, X), rtol=1e-6, atol=1e-5)


@given(pumps, alphas, finite, finite, finite)
def test_compiled_drift_and_jacobian_agree_with_reference(J, alpha, x, y, n):
    X = np.array([x, y, n * 0.01])
    for p, code in ((LaserParams(J=J, alpha=alpha, Delta=0.3), K.LASER),
                    (LandauStuartParams(J=J, alpha=alpha, DeltaTilde=0.3), K.LANDAU_STUART)):
        d = K.drift(code, p.packed(), np.zeros(3), X, 0.0)
        ref = drift(State.from_array(X), p)
        assert np.allclose(d[: len(ref)], ref, rtol=1e-12, atol=1e-9)
        Jk = K.jacobian(code, p.packed(), X)
        Jr = jacobian(State.from_array(X), p)
        m = Jr.shape[0]
        assert np.allclose(Jk[:m, :m], Jr, rtol=1e-12, atol=1e-9)


def test_laser_drift_by_hand():
    # dE/dt = i Delta E + g gamma (1 - i alpha) N E, dN/dt = J - N - (1 + g N)|E|^2
    p = LaserParams(J=2.0, Delta=0.5, alpha=3.0)
    E, N = complex(0.3, -0.4), 0.01
    dE = 1j * 0.5 * E + 2.765 * 500 * (1 - 3j) * N * E
    dN = 2.0 - N - (1 + 2.765 * N) * 0.25
    out = drift(State.from_complex(E, N), p)
    assert out == pytest.approx([dE.real, dE.imag, dN], rel=1e-14)


def test_ls_drift_by_hand():
    p = LandauStuartParams(J=1.5, DeltaTilde=0.2, alpha=2.0)
    E = complex(0.7, 0.1)
    e2 = abs(E) ** 2
    dE = (1.5 + 1j * (0.2 - 2.0 * (1.5 - e2))) * E - E * e2
    assert drift(State.from_complex(E), p) == pytest.approx([dE.real, dE.imag], rel=1e-14)


def test_nonfinite_state_raises():
    with pytest.raises(BlowUpError):
        drift(State(float("nan"), 0.0, 0.0), LaserParams(J=1))


@pytest.mark.parametrize("J", [1e-4, 1e-2, 1.0, 5.0, 20.0, 2000.0])
def test_closed_form_matches_jacobian_eigenvalues_on_cycle(J):
    # at Delta = 0 every cycle point is an equilibrium, so the Floquet
    # exponents are the eigenvalues of the Jacobian there
    p = LaserParams(J=J, alpha=2.0)
    ev = np.linalg.eigvals(jacobian(on_cycle_state(p, 0.3), p))
    f = floquet_closed_form(p)
    want = sorted([f.mu1, f.mu2, f.mu3], key=lambda z: (z.real, z.imag))
    got = sorted(ev, key=lambda z: (z.real, z.imag))
    scale = max(abs(z) for z in want)
    assert np.allclose(got, want, atol=1e-9 * scale)


def test_closed_form_reference_value_j1():
    f = floquet_closed_form(LaserParams(J=1.0))
    assert f.mu1 == 0.0
    assert f.mu2.real == pytest.approx(-1.8825, abs=1e-12)
    assert abs(f.mu2.imag) == pytest.approx(math.sqrt(2 * 2.765 * 500 - 1.8825**2), rel=1e-12)
    assert abs(f.mu2.imag) == pytest.approx(52.549, abs=1e-3)
    assert f.regime == "underdamped"


@given(st.floats(1e-3, 50), alphas)
def test_ls_exponent_is_minus_two_j(J, alpha):
    p = LandauStuartParams(J=J, alpha=alpha)
    f = floquet_closed_form(p)
    ev = np.linalg.eigvals(jacobian(on_cycle_state(p, 1.0), p))
    assert f.mu2 == pytest.approx(-2 * J)
    assert sorted(ev.real) == pytest.approx([-2 * J, 0.0], abs=1e-9 * max(1, J))
    assert relaxation_rate(p) == pytest.approx(2 * J)


def test_regime_boundaries():
    lo, hi = regime_boundaries()
    assert 8.5e-5 < lo < 9.5e-5
    assert 1440 < hi < 1450
    for J in (lo, hi):
        a = 0.5 * (1 + 2.765 * J)
        assert a * a == pytest.approx(2 * 2.765 * 500 * J, rel=1e-9)
    assert floquet_closed_form(LaserParams(J=lo / 2)).regime == "overdamped"
    assert floquet_closed_form(LaserParams(J=hi * 2)).regime == "overdamped"
    assert floquet_closed_form(LaserParams(J=1.0)).regime == "underdamped"


def test_overdamped_exponents_are_real_and_negative():
    f = floquet_closed_form(LaserParams(J=1e-5))
    assert f.mu2.imag == 0 and f.mu3.imag == 0
    assert f.mu3.real < f.mu2.real < 0


def test_no_cycle_below_threshold():
    with pytest.raises(ValueError):
        floquet_closed_form(LaserParams(J=0.0))
    with pytest.raises(ValueError):
        floquet_closed_form(LandauStuartParams(J=-1.0))


@given(st.floats(-10, 10), alphas, st.floats(0.05, 5))
def test_isochrone_points_share_psi(C, alpha, rmax):
    pts = isochrone_points(C, alpha, (0.01, rmax), 50)
    psi = unwrapped_psi(pts[:, 0], pts[:, 1], alpha)
    d = (psi - C + np.pi) % (2 * np.pi) - np.pi
    assert np.allclose(d, 0, atol=1e-9)


def test_isochrone_range_must_exclude_zero():
    with pytest.raises(ValueError):
        isochrone_points(0.0, 1.0, (0.0, 1.0))


def test_phase_psi_values():
    s = State.from_complex(cmath.rect(2.0, 0.5))
    assert phase_psi(s, 3.0) == pytest.approx(0.5 + 3.0 * math.log(2.0))
    assert 0 <= phase_psi(State(-1.0, -1e-9), 0.0, wrap=True) < 2 * math.pi
    with pytest.raises(ValueError):
        phase_psi(State(0.0, 0.0), 1.0)


def test_reduction_maps_detuning_to_rescaled_time():
    p = LaserParams(J=0.3, Delta=2.765 * 500 * 0.1, alpha=4.0)
    q = reduce_to_landau_stuart(p)
    assert q.J == 0.3 and q.alpha == 4.0
    assert q.DeltaTilde == pytest.approx(0.1)


@given(st.sampled_from(["laser", "landau_stuart"]), pumps, alphas)
def test_params_dict_round_trip(kind, J, alpha):
    p = LaserParams(J=J, alpha=alpha) if kind == "laser" else LandauStuartParams(J=J, alpha=alpha)
    assert params_from_dict(params_to_dict(p)) == p


def test_invalid_params():
    with pytest.raises(ValueError):
        LaserParams(J=1.0, gamma=0.0)
    with pytest.raises(ValueError):
        LaserParams(J=float("inf"))
    with pytest.raises(ValueError):
        params_from_dict({"model": "duffing", "J": 1.0})
