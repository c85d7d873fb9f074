"""Density matrices and Wigner functions of the Kerr-evolved single mode.

The Wigner series is evaluated through the normalized Laguerre functions

    psi_{l,k}(x) = sqrt(l!/(l+k)!) x^{k/2} L_l^k(x) e^{-x/2},   x = 4|beta|^2,

which are bounded by one. Thus (2 beta)^k e^{-2|beta|^2} sqrt(l!/(l+k)!)
never has to be formed from its individually huge factors. The functions
come from a forward three-term recurrence in l at fixed k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .kerr import KerrParams, _cis_turns
from .specfun import laguerre
from .states import ModeSpec, make_state, mean_photon_number

__all__ = [
    "DensityMatrix",
    "WignerGrid",
    "density_matrix",
    "default_grid",
    "wigner_evaluate",
    "wigner_coherent_t0",
    "wigner_pacs_t0",
    "nonclassicality_delta",
    "delta_time_sweep",
    "grid_axis",
]

DEFAULT_SPACING = 0.04
# the series error scales like the square root of the discarded tail weight
WIGNER_TOL = 1e-20
EXTENT_MARGIN = 4.0


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray
    t: float

    @property
    def n_max(self) -> int:
        return self.rho.shape[0] - 1

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.rho.conj().T, self.rho)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))


@dataclass(frozen=True)
class WignerGrid:
    extent: float
    spacing: float
    values: np.ndarray  # values[i, j] at beta = axis[j] + 1j * axis[i]

    @property
    def axis(self) -> np.ndarray:
        return grid_axis(self.extent, self.spacing)

    def integral(self) -> float:
        return float(_trapezoid_2d(self.values, self.spacing))

    def minimum(self) -> tuple[float, complex]:
        idx = np.unravel_index(int(np.argmin(self.values)), self.values.shape)
        ax = self.axis
        return float(self.values[idx]), complex(ax[idx[1]], ax[idx[0]])


def grid_axis(extent: float, spacing: float) -> np.ndarray:
    if not (extent > 0 and spacing > 0):
        raise DomainError("grid extent and spacing must be positive")
    half = int(round(extent / spacing))
    return np.arange(-half, half + 1) * spacing


def default_grid(spec: ModeSpec) -> tuple[float, float]:
    """(extent, spacing) wide enough to hold the state's Wigner function."""
    return math.sqrt(mean_photon_number(spec)) + EXTENT_MARGIN, DEFAULT_SPACING


def _trapezoid_2d(values: np.ndarray, h: float) -> float:
    w = np.ones(values.shape[-1])
    w[0] = w[-1] = 0.5
    return np.einsum("...ij,i,j->...", values, w, w) * h * h


def density_matrix(spec: ModeSpec, params: KerrParams, t: float, tol: float = WIGNER_TOL) -> DensityMatrix:
    """rho_ln(t) = c_l c_n^* exp(-i chi [l(l-1) - n(n-1)] t)."""
    spec.require_gaussian_family("density_matrix")
    c = make_state(spec, tol).amps
    n = np.arange(len(c))
    pairs = n * (n - 1) // 2
    u = float(params.fraction(t))
    phase = _cis_turns(-u * (pairs[:, None] - pairs[None, :]))
    return DensityMatrix(np.outer(c, c.conj()) * phase, t)


def _laguerre_functions(k: int, l_max: int, x: np.ndarray) -> np.ndarray:
    """Rows psi_{l,k}(x) for l = 0..l_max."""
    out = np.empty((l_max + 1,) + x.shape)
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    if k == 0:
        out[0] = np.exp(-0.5 * x)
    else:
        out[0] = np.where(x > 0, np.exp(0.5 * k * logx - 0.5 * x - 0.5 * math.lgamma(k + 1.0)), 0.0)
    if l_max >= 1:
        out[1] = (1.0 + k - x) * out[0] / math.sqrt(k + 1.0)
    for l in range(1, l_max):
        out[l + 1] = ((2 * l + 1 + k - x) * out[l] - math.sqrt(l * (l + k)) * out[l - 1]) / math.sqrt(
            (l + 1) * (l + k + 1)
        )
    return out


def _series(rhos: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Wigner values for a stack of density matrices (T, N, N) at points ``beta``."""
    n = rhos.shape[-1]
    x = 4.0 * np.abs(beta) ** 2
    r = np.abs(beta)
    unit = np.where(r > 0, beta / np.where(r > 0, r, 1.0), 1.0)
    total = np.zeros((rhos.shape[0],) + beta.shape)
    rot = np.ones(beta.shape, dtype=complex)
    flat = beta.size
    for k in range(n):
        psi = _laguerre_functions(k, n - 1 - k, x).reshape(n - k, flat)
        l = np.arange(n - k)
        sign = np.where(l % 2, -1.0, 1.0) * (1.0 if k == 0 else 2.0)
        diag = rhos[:, l, l + k] * sign  # (T, n-k)
        part = (diag.real @ psi + 1j * (diag.imag @ psi)).reshape((rhos.shape[0],) + beta.shape)
        total += np.real(part * rot)
        rot = rot * unit
    total *= 2.0 / math.pi
    if not np.all(np.isfinite(total)):
        raise NumericalError("Wigner series produced non-finite values")
    return total


def _mesh(extent: float, spacing: float) -> np.ndarray:
    ax = grid_axis(extent, spacing)
    return ax[None, :] + 1j * ax[:, None]


def wigner_evaluate(rho: DensityMatrix, grid_spec: tuple[float, float]) -> WignerGrid:
    extent, spacing = grid_spec
    beta = _mesh(extent, spacing)
    vals = _series(rho.rho[None], beta)[0]
    return WignerGrid(extent, spacing, vals)


def wigner_coherent_t0(alpha: complex, beta) -> np.ndarray:
    return 2.0 / math.pi * np.exp(-2.0 * np.abs(np.asarray(beta) - alpha) ** 2)


def wigner_pacs_t0(spec: ModeSpec, beta) -> np.ndarray:
    """Closed-form Wigner function of the photon-added coherent state."""
    beta = np.asarray(beta)
    a, m = spec.alpha, spec.m
    pref = 2.0 * (-1) ** m / (math.pi * laguerre(m, 0, -spec.nu))
    return pref * np.real(laguerre(m, 0, np.abs(2.0 * beta - a) ** 2)) * np.exp(-2.0 * np.abs(a - beta) ** 2)


def nonclassicality_delta(grid: WignerGrid) -> float:
    """Integral of |W| over the grid minus one."""
    return float(_trapezoid_2d(np.abs(grid.values), grid.spacing)) - 1.0


def delta_time_sweep(spec: ModeSpec, params: KerrParams, t_grid, grid_spec=None, batch: int = 32):
    """delta(t) and the grid minimum of W at every time in ``t_grid``.

    Returns (delta, min_w) arrays.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    extent, spacing = grid_spec or default_grid(spec)
    beta = _mesh(extent, spacing)
    deltas, mins = [], []
    for start in range(0, len(t_grid), batch):
        chunk = t_grid[start : start + batch]
        rhos = np.stack([density_matrix(spec, params, t).rho for t in chunk])
        w = _series(rhos, beta)
        deltas.extend(_trapezoid_2d(np.abs(w), spacing) - 1.0)
        mins.extend(w.reshape(len(chunk), -1).min(axis=1))
    return np.array(deltas, dtype=float), np.array(mins, dtype=float)
