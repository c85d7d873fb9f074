import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrlab.errors import DomainError
from kerrlab.kerr import (
    KerrParams,
    MomentRequest,
    autocorrelation,
    brute_force_evolve,
    classical_map,
    coherent_moment,
    cumulant_sweep,
    fractional_revival_coefficients,
    fractional_revival_state,
    ladder_expectation,
    moment,
    moment_factor_z,
    quadrature_cumulants,
    rotated_point,
)
from kerrlab.specfun import laguerre
from kerrlab.states import ModeSpec, make_state

PARAMS = KerrParams()
T = PARAMS.t_rev


def fine_state(spec):
    # moments of order ~8 need far less tail than 1e-12 allows
    return make_state(spec, tol=1e-30)


def test_mean_a_in_coherent_state():
    spec = ModeSpec(nu=2.0, theta=0.7)
    assert moment(spec, PARAMS, MomentRequest(0, 1, 0.0)) == pytest.approx(spec.alpha, rel=1e-14)


def test_worked_brute_force_example():
    spec = ModeSpec(nu=1.3, theta=0.4, m=2)
    t = 0.11
    ref = ladder_expectation(brute_force_evolve(fine_state(spec), KerrParams(5.0), t), 1, 1)
    assert moment(spec, KerrParams(5.0), MomentRequest(1, 1, t)) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 10.0),
    st.floats(0.0, 2 * math.pi),
    st.integers(0, 10),
    st.integers(0, 2),
    st.integers(0, 4),
    st.floats(0.0, 2.0),
)
def test_moment_matches_brute_force(nu, theta, m, r, s, u):
    spec = ModeSpec(nu=nu, theta=theta, m=m)
    state = fine_state(spec)
    ref = ladder_expectation(brute_force_evolve(state, PARAMS, u * T), r, s)
    scale = math.sqrt(abs(ladder_expectation(state, r, 0)) * abs(ladder_expectation(state, r + s, 0)))
    got = moment(spec, PARAMS, MomentRequest(r, s, u * T))
    assert abs(got - ref) <= 1e-8 * scale


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 40.0), st.floats(0, 2 * math.pi), st.integers(0, 4), st.integers(0, 4), st.floats(0, 1))
def test_coherent_reduction(nu, theta, r, s, u):
    spec = ModeSpec(nu=nu, theta=theta)
    req = MomentRequest(r, s, u * T)
    want = coherent_moment(spec, PARAMS, req)
    assert abs(moment(spec, PARAMS, req) - want) <= 1e-10 * max(abs(want), 1e-300)


@pytest.mark.parametrize("m", [0, 1, 4])
def test_revival_periodicity(m):
    spec = ModeSpec(nu=3.0, theta=0.3, m=m)
    for r, s in [(0, 1), (1, 1), (2, 3)]:
        a = moment(spec, PARAMS, MomentRequest(r, s, 0.0))
        b = moment(spec, PARAMS, MomentRequest(r, s, T))
        assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


def test_number_moments_are_constant():
    spec = ModeSpec(nu=2.0, theta=1.0, m=2)
    vals = [moment(spec, PARAMS, MomentRequest(2, 0, u * T)) for u in (0.0, 0.13, 0.71)]
    assert np.allclose(vals, vals[0], rtol=1e-12)


def test_coherent_cumulants_at_zero():
    rec = quadrature_cumulants(ModeSpec(nu=4.0, theta=0.2), PARAMS, 0.0)
    assert rec.var_x == pytest.approx(0.5)
    assert rec.var_p == pytest.approx(0.5)
    assert rec.skew2_x == pytest.approx(0.0, abs=1e-12)
    assert rec.kurt_x - 3 == pytest.approx(0.0, abs=1e-9)
    assert rec.uncertainty_product == pytest.approx(0.5)


def test_coherent_cumulants_vanish_at_revivals():
    rec = quadrature_cumulants(ModeSpec(nu=4.0, theta=0.2), PARAMS, np.array([T, 2 * T]))
    np.testing.assert_allclose(rec.skew2_x, 0.0, atol=1e-9)
    np.testing.assert_allclose(rec.kurt_p - 3.0, 0.0, atol=1e-8)


def test_collapse_values():
    spec = ModeSpec(nu=100.0, theta=math.pi / 4)
    assert quadrature_cumulants(spec, PARAMS, 0.37 * T).uncertainty_product == pytest.approx(100.5, rel=0.05)
    assert quadrature_cumulants(spec, PARAMS, 0.4 * T).kurt_x - 3 == pytest.approx(-1.5, abs=0.1)


def test_pacs_initial_mean():
    spec = ModeSpec(nu=1.7, theta=0.6, m=3)
    x0 = math.sqrt(2) * spec.alpha.real
    want = x0 * laguerre(3, 1, -1.7) / laguerre(3, 0, -1.7)
    assert quadrature_cumulants(spec, PARAMS, 0.0).mean_x == pytest.approx(want, rel=1e-12)


def test_kth_moment_magnitude_repeats_k_times_per_revival():
    spec = ModeSpec(nu=0.5, theta=0.3)
    n = 1024
    u = np.arange(n) / n
    for k in (1, 2, 3):
        mag = np.abs(moment(spec, PARAMS, MomentRequest(0, k, u * T)))
        spectrum = np.abs(np.fft.rfft(mag))
        off = np.arange(len(spectrum)) % k != 0
        if k > 1:
            assert spectrum[off].max() < 1e-10 * spectrum.max()
        assert np.argmax(spectrum[1:]) + 1 == k


@pytest.mark.parametrize("k", [2, 3, 4])
def test_fractional_revival_shows_in_kth_moment_only(k):
    spec = ModeSpec(nu=10.0, theta=0.3)
    scaled = [abs(moment(spec, PARAMS, MomentRequest(0, j, T / k))) / spec.nu ** (j / 2) for j in range(1, k + 1)]
    assert scaled[-1] == pytest.approx(1.0, rel=1e-9)
    assert max(scaled[:-1]) < 1e-4


def test_autocorrelation():
    spec = ModeSpec(nu=1.0, theta=0.5)
    assert autocorrelation(spec, PARAMS, 0.0) == pytest.approx(1.0)
    assert autocorrelation(spec, PARAMS, T) == pytest.approx(1.0, abs=1e-10)
    state = fine_state(spec)
    ref = abs(np.vdot(state.amps, brute_force_evolve(state, PARAMS, T / 2).amps)) ** 2
    assert autocorrelation(spec, PARAMS, T / 2) == pytest.approx(ref, rel=1e-10)


def test_fractional_revival_coefficients():
    np.testing.assert_allclose(fractional_revival_coefficients(1), [1.0])
    for k in range(1, 7):
        assert np.sum(np.abs(fractional_revival_coefficients(k)) ** 2) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        fractional_revival_coefficients(0)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
@pytest.mark.parametrize("m", [0, 2])
def test_fractional_revival_matches_evolution(k, m):
    spec = ModeSpec(nu=1.0, theta=0.3, m=m)
    state = make_state(spec)
    want = brute_force_evolve(state, PARAMS, T / k).amps
    got = fractional_revival_state(spec, k).amps
    assert np.max(np.abs(got - want)) < 1e-9


def test_half_revival_is_cat_state():
    spec = ModeSpec(nu=2.0, theta=0.0)
    state = make_state(spec)
    half = fractional_revival_state(spec, 2).amps
    plus = make_state(ModeSpec(nu=2.0, theta=math.pi / 2)).amps
    minus = make_state(ModeSpec(nu=2.0, theta=-math.pi / 2)).amps
    # weights of |i alpha> and |-i alpha> are equal
    assert abs(np.vdot(plus, half)) == pytest.approx(abs(np.vdot(minus, half)), rel=1e-9)
    assert np.linalg.norm(half) == pytest.approx(np.linalg.norm(state.amps), rel=1e-12)


def test_classical_map():
    spec = ModeSpec.from_quadratures(1.0, 2.0)
    x, p, tau = classical_map(spec, KerrParams(5.0), 0.0)
    assert (x, p, tau) == pytest.approx((1.0, 2.0, 0.0))
    ts = np.linspace(0, T, 50)
    x, p, _ = classical_map(spec, PARAMS, ts)
    np.testing.assert_allclose(x**2 + p**2, 5.0, rtol=1e-8)
    spec = ModeSpec(nu=10.0, theta=0.4)
    x, p, tau = classical_map(spec, KerrParams(5.0), 0.03)
    rx, rp = rotated_point(spec, tau)
    assert (x, p) == pytest.approx((rx, rp), rel=1e-9)


def test_moment_factor_z():
    ts = np.linspace(0, T, 31)
    np.testing.assert_allclose(np.abs(moment_factor_z(ModeSpec(nu=1.0), PARAMS, ts)), 1.0, atol=1e-12)
    mags = np.abs(moment_factor_z(ModeSpec(nu=1.0, m=2), PARAMS, ts))
    assert np.ptp(mags) > 1e-3


def test_brute_force_properties():
    state = make_state(ModeSpec(nu=2.0, theta=0.1, m=1))
    np.testing.assert_array_equal(brute_force_evolve(state, PARAMS, 0.0).amps, state.amps)
    np.testing.assert_allclose(brute_force_evolve(state, PARAMS, T).amps, state.amps, atol=1e-15)
    later = brute_force_evolve(state, PARAMS, 0.37)
    for k in (1, 2, 3):
        assert later.number_moment(k) == pytest.approx(state.number_moment(k), rel=1e-13)


def test_cumulant_sweep_columns():
    cols = cumulant_sweep(ModeSpec(nu=1.0, theta=0.3), PARAMS, np.linspace(0, 1, 5))
    assert list(cols)[0] == "t_over_Trev"
    assert all(len(v) == 5 for v in cols.values())
