import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from kerrlab.errors import CapacityError, DomainError
from kerrlab.states import (
    ModeSpec,
    StateKind,
    make_state,
    mean_photon_number,
    nonlinear_eigenrelation_residual,
    phase_distribution,
    phase_grid,
    single_photon_probability,
    truncation_size,
)


def test_vacuum_and_number_states():
    vac = make_state(ModeSpec.coherent(0.0)).amps
    assert vac[0] == 1 and not np.any(vac[1:])
    amps = make_state(ModeSpec.photon_added(0.0, 3)).amps
    assert abs(amps[3]) == pytest.approx(1.0)
    assert np.sum(np.abs(amps) ** 2) == pytest.approx(1.0)


def test_kind_and_quadrature_constructor():
    spec = ModeSpec.from_quadratures(1.0, 1.0)
    assert spec.nu == pytest.approx(1.0)
    assert spec.theta == pytest.approx(math.pi / 4)
    assert ModeSpec(fock=2).kind is StateKind.FOCK
    assert ModeSpec(nu=1, m=2).kind is StateKind.PHOTON_ADDED


@pytest.mark.parametrize("bad", [dict(nu=-1.0), dict(nu=float("inf")), dict(m=-1), dict(m=1.5), dict(fock=-2)])
def test_invalid_specs(bad):
    with pytest.raises(DomainError):
        ModeSpec(**bad)


def test_truncation_bounds():
    with pytest.raises(DomainError):
        truncation_size(ModeSpec.coherent(1.0), tol=1e-3)
    with pytest.raises(CapacityError):
        truncation_size(ModeSpec.coherent(4000.0), cap=4096)
    assert 150 < truncation_size(ModeSpec.coherent(100.0)) < 250


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 20.0), st.integers(0, 10), st.floats(0, 2 * math.pi))
def test_norm_and_mean(nu, m, theta):
    spec = ModeSpec(nu=nu, theta=theta, m=m)
    state = make_state(spec)
    assert state.norm() == pytest.approx(1.0, abs=1e-10)
    assert state.number_moment(1) == pytest.approx(mean_photon_number(spec), rel=1e-8, abs=1e-8)
    # no weight below the added-photon count
    assert np.all(state.amps[:m] == 0)


def test_mean_photon_number_limits():
    assert mean_photon_number(ModeSpec(nu=0.0, m=4)) == pytest.approx(4.0)
    assert mean_photon_number(ModeSpec(nu=2.5)) == pytest.approx(2.5)
    assert abs(mean_photon_number(ModeSpec(nu=100.0, m=3)) - 106.0) < 0.1
    for m in (1, 3, 5):
        excess = [mean_photon_number(ModeSpec(nu=nu, m=m)) - nu for nu in (1.0, 10.0, 100.0)]
        assert excess[0] < excess[1] < excess[2] <= 2 * m
        assert excess[2] == pytest.approx(2 * m, rel=0.05)


def test_single_photon_probability():
    nu = 0.8
    assert single_photon_probability(ModeSpec(nu=nu)) == pytest.approx(nu * math.exp(-nu))
    assert single_photon_probability(ModeSpec(nu=0.0, m=1)) == pytest.approx(1.0)

    def gap(v):
        return single_photon_probability(ModeSpec(nu=v, m=1)) - single_photon_probability(ModeSpec(nu=v))

    root = brentq(gap, 0.3, 1.0, xtol=1e-12)
    assert root == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-6)


def test_phase_distribution():
    phi = phase_grid(512)
    flat = phase_distribution(make_state(ModeSpec(fock=3)), phi)
    np.testing.assert_allclose(flat, 1 / (2 * math.pi), rtol=1e-12)
    for spec in (ModeSpec(nu=2.0, theta=0.3, m=2), ModeSpec(nu=0.3)):
        p = phase_distribution(make_state(spec), phi)
        assert np.sum(p) * (phi[1] - phi[0]) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("nu,m", [(1.0, 1), (1.0, 0), (4.0, 5)])
def test_eigenrelation(nu, m):
    spec = ModeSpec(nu=nu, theta=0.2, m=m)
    assert nonlinear_eigenrelation_residual(make_state(spec), spec) < 1e-8


def test_csv_round_trip(tmp_path):
    state = make_state(ModeSpec(nu=1.0, theta=0.5, m=1))
    path = tmp_path / "s.csv"
    state.to_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    np.testing.assert_array_equal(data["re"] + 1j * data["im"], state.amps)
