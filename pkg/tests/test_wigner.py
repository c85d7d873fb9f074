import math

import numpy as np
import pytest
from scipy.linalg import expm

from kerrlab.kerr import KerrParams, brute_force_evolve
from kerrlab.states import ModeSpec, make_state
from kerrlab.wigner import (
    default_grid,
    delta_time_sweep,
    density_matrix,
    nonclassicality_delta,
    wigner_coherent_t0,
    wigner_evaluate,
    wigner_pacs_t0,
)

PARAMS = KerrParams()
T = PARAMS.t_rev


def parity_wigner(rho, beta, size=80):
    """W(beta) = (2/pi) Tr[rho D(beta) P D(beta)^dag] in a padded Fock basis."""
    n = rho.shape[0]
    big = np.zeros((size, size), dtype=complex)
    big[:n, :n] = rho
    a = np.diag(np.sqrt(np.arange(1, size)), 1)
    disp = expm(beta * a.conj().T - np.conj(beta) * a)
    parity = np.diag((-1.0) ** np.arange(size))
    op = disp @ parity @ disp.conj().T
    return 2.0 / math.pi * float(np.real(np.trace(big @ op)))


@pytest.mark.parametrize("m", [0, 1, 3])
def test_density_matrix_against_evolved_state(m):
    spec = ModeSpec(nu=1.5, theta=0.4, m=m)
    t = 0.173
    rho = density_matrix(spec, PARAMS, t)
    psi = brute_force_evolve(make_state(spec, tol=1e-20), PARAMS, t).amps
    np.testing.assert_allclose(rho.rho, np.outer(psi, psi.conj()), atol=1e-13)
    assert rho.trace() == pytest.approx(1.0, abs=1e-12)
    assert rho.purity() == pytest.approx(1.0, abs=1e-12)
    assert rho.hermiticity_error() < 1e-15


@pytest.mark.parametrize("m", [0, 1, 2])
def test_series_against_parity_operator(m):
    spec = ModeSpec(nu=0.8, theta=0.3, m=m)
    rho = density_matrix(spec, PARAMS, 0.21)
    w = wigner_evaluate(rho, (1.2, 0.4))
    ax = w.axis
    for i, j in [(0, 0), (3, 3), (2, 5), (6, 1)]:
        want = parity_wigner(rho.rho, complex(ax[j], ax[i]))
        assert w.values[i, j] == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("m", [0, 1, 4])
def test_closed_forms_at_zero(m):
    spec = ModeSpec(nu=1.0, theta=0.6, m=m)
    w = wigner_evaluate(density_matrix(spec, PARAMS, 0.0), (4.0, 0.1))
    ax = w.axis
    beta = ax[None, :] + 1j * ax[:, None]
    ref = wigner_pacs_t0(spec, beta)
    assert np.max(np.abs(w.values - ref)) < 1e-10
    if m == 0:
        np.testing.assert_allclose(ref, wigner_coherent_t0(spec.alpha, beta), atol=1e-14)


def test_normalization_and_coherent_delta():
    spec = ModeSpec(nu=1.0, theta=0.0)
    w = wigner_evaluate(density_matrix(spec, PARAMS, 0.0), default_grid(spec))
    assert w.integral() == pytest.approx(1.0, abs=1e-10)
    assert abs(nonclassicality_delta(w)) < 1e-8


def test_photon_added_state_is_nonclassical():
    spec = ModeSpec(nu=1.0, theta=0.0, m=1)
    w = wigner_evaluate(density_matrix(spec, PARAMS, 0.0), default_grid(spec))
    assert nonclassicality_delta(w) > 0.01
    value, _ = w.minimum()
    assert value < 0


def test_delta_symmetry_and_period():
    # theta = 0 keeps the reflected state on the same square grid
    spec = ModeSpec(nu=1.0, theta=0.0, m=1)
    ts = np.array([0.1, 0.27, 0.4]) * T
    grid = (default_grid(spec)[0], 0.08)
    d1, _ = delta_time_sweep(spec, PARAMS, ts, grid)
    d2, _ = delta_time_sweep(spec, PARAMS, T - ts, grid)
    np.testing.assert_allclose(d1, d2, atol=1e-10)
    d0, _ = delta_time_sweep(spec, PARAMS, [0.0, T, 2 * T], grid)
    np.testing.assert_allclose(d0, d0[0], atol=1e-10)


def test_sweep_matches_single_evaluation():
    spec = ModeSpec(nu=1.0, theta=0.3)
    grid = (3.0, 0.1)
    deltas, mins = delta_time_sweep(spec, PARAMS, [0.5 * T], grid, batch=1)
    w = wigner_evaluate(density_matrix(spec, PARAMS, 0.5 * T), grid)
    assert deltas[0] == pytest.approx(nonclassicality_delta(w), abs=1e-13)
    assert mins[0] == pytest.approx(w.minimum()[0], abs=1e-13)
    assert deltas[0] > 0.1
