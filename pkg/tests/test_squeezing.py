import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrlab.errors import DomainError
from kerrlab.kerr import KerrParams
from kerrlab.squeezing import (
    d_q_cs,
    d_q_cs_half_revival,
    d_q_moments,
    d_q_pacs,
    f_q_polynomial,
    hm_threshold,
    hong_mandel,
    mean_f_q,
    quadrature_variance_static,
    squeeze_report,
)
from kerrlab.kerr import quadrature_cumulants
from kerrlab.states import ModeSpec, make_state

PARAMS = KerrParams()
T = PARAMS.t_rev


def ladder(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1)


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_f_q_is_commutator_diagonal(q):
    size = 40
    a = ladder(size)
    aq = np.linalg.matrix_power(a, q)
    comm = aq @ aq.T - aq.T @ aq
    interior = np.arange(size - q)
    np.testing.assert_allclose(np.diag(comm)[interior], f_q_polynomial(q, interior), rtol=1e-10)
    off = comm - np.diag(np.diag(comm))
    assert np.max(np.abs(off)) < 1e-10


def test_f_q_small_cases():
    assert f_q_polynomial(1, 7) == 1
    assert f_q_polynomial(2, 3) == 4 * 3 + 2
    with pytest.raises(DomainError):
        f_q_polynomial(0, 1)


def test_mean_f_q_matches_state_average():
    spec = ModeSpec(nu=2.0, theta=0.4, m=2)
    p = make_state(spec, tol=1e-30).probabilities()
    n = np.arange(len(p))
    for q in (1, 2, 3):
        assert mean_f_q(spec, q) == pytest.approx(float(p @ f_q_polynomial(q, n)), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(0, 2 * math.pi), st.integers(0, 5), st.integers(1, 3), st.floats(0, 1))
def test_closed_form_matches_moment_route(nu, theta, m, q, u):
    spec = ModeSpec(nu=nu, theta=theta, m=m)
    want = d_q_moments(spec, PARAMS, q, u * T)
    assert d_q_pacs(spec, PARAMS, q, u * T) == pytest.approx(want, rel=1e-8, abs=1e-8)
    if m == 0:
        assert d_q_cs(spec, PARAMS, q, u * T) == pytest.approx(d_q_pacs(spec, PARAMS, q, u * T), abs=1e-10)


def test_coherent_state_is_minimal_at_zero():
    for q in (1, 2, 3):
        assert d_q_cs(ModeSpec(nu=3.0, theta=0.7), PARAMS, q, 0.0) == pytest.approx(0.0, abs=1e-10)


def test_half_revival_values():
    for q in (2, 4):
        assert abs(d_q_cs(ModeSpec(nu=1.5, theta=0.3), PARAMS, q, T / 2)) < 1e-10
    for q in (1, 3):
        spec = ModeSpec(nu=0.7, theta=0.0)
        want = -4 * 0.7**q / mean_f_q(spec, q) * math.exp(-4 * 0.7)
        assert d_q_cs(spec, PARAMS, q, T / 2) == pytest.approx(want, rel=1e-9)
        spec = ModeSpec(nu=0.7, theta=0.2)
        assert d_q_cs(spec, PARAMS, q, T / 2) == pytest.approx(d_q_cs_half_revival(spec, q), rel=1e-9, abs=1e-14)


def test_no_odd_squeezing_for_pacs():
    assert d_q_pacs(ModeSpec(nu=1.0, m=1), PARAMS, 1, T / 2) >= 0


def test_amplitude_squared_squeezing_window_for_pacs():
    vals = [d_q_pacs(ModeSpec(nu=nu, theta=0.0, m=1), PARAMS, 2, T / 2) for nu in np.linspace(0.05, 20, 400)]
    assert min(vals) < 0


def test_early_time_squeezing_coherent():
    spec = ModeSpec(nu=10.0, theta=0.0)
    u = np.linspace(1e-4, 0.02, 400)
    for q in (1, 2, 3, 4):
        assert np.min(d_q_cs(spec, PARAMS, q, u * T)) < 0


def test_lower_bound():
    for m in (0, 1, 3):
        spec = ModeSpec(nu=2.0, theta=0.5, m=m)
        for q in (1, 2, 3):
            assert np.min(d_q_pacs(spec, PARAMS, q, np.linspace(0, T, 301))) >= -1 - 1e-12


def test_hong_mandel():
    thr = hm_threshold(2)
    assert thr == 0.75
    spec = ModeSpec(nu=1.0, theta=0.3)
    assert hong_mandel(spec, PARAMS, 2, 0.0)[0] == pytest.approx(thr)
    near = [hong_mandel(spec, PARAMS, 2, u * T)[0] for u in np.linspace(0.45, 0.55, 41)]
    assert min(near) > thr
    assert hong_mandel(spec, PARAMS, 2, T)[0] == pytest.approx(thr, abs=1e-9)
    pacs = ModeSpec(nu=1.0, theta=0.3, m=5)
    assert min(hong_mandel(pacs, PARAMS, 2, u * T)[0] for u in np.linspace(0, 1, 201)) > thr


def test_static_variance_matches_cumulants():
    for m in (0, 1, 3):
        spec = ModeSpec(nu=4.0, theta=0.3, m=m)
        rec = quadrature_cumulants(spec, PARAMS, 0.0)
        assert quadrature_variance_static(spec, 0.0) == pytest.approx(float(rec.var_x), rel=1e-10)
        assert quadrature_variance_static(spec, -math.pi / 2) == pytest.approx(float(rec.var_p), rel=1e-10)


def test_report():
    rep = squeeze_report(ModeSpec(nu=0.5, theta=0.0), PARAMS, 1, T / 2)
    assert rep.squeezed and rep.d_q < 0
