"""Field mode a coupled to an anharmonic oscillator b.

H = omega a^dag a + omega0 b^dag b + gamma b^dag^2 b^2 + g (a^dag b + b^dag a)

The total number N = a^dag a + b^dag b is conserved, so H splits into
blocks of fixed N. In the basis |N - n; n> (n quanta in b) each block is a
real symmetric tridiagonal matrix. The field starts in a coherent,
photon-added or Fock state and the oscillator b starts in its ground state.

Time series are usually requested on a grid in units of g*t, the
dimensionless time used throughout the analysis of this system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConsistencyError, DegenerateDataError, DomainError, NumericalError
from .squeezing import f_q_polynomial
from .states import ModeSpec, make_state, mean_photon_number, truncation_size
from .tridiag import tridiagonal_eigh
from .tsa import TimeSeries

__all__ = [
    "TwoModeParams",
    "WEAK",
    "STRONG",
    "BlockEigensystem",
    "ProductInitialState",
    "TwoModeState",
    "ReducedDensityMatrix",
    "QuadratureStats",
    "block_matrix",
    "angular_momentum_block",
    "diagonalize_blocks",
    "required_n_tot",
    "evolve",
    "reduced_density",
    "entropies",
    "entropy_series",
    "quadrature_stats",
    "mean_photon_series",
    "number_series",
    "exchange_current",
    "classical_reference",
    "ClassicalTrajectory",
    "SWEEP_COLUMNS",
]

TAIL_TOL = 1e-10
EIGEN_CLAMP = 1e-14
NEGATIVE_EIGEN_LIMIT = -1e-6


@dataclass(frozen=True)
class TwoModeParams:
    omega: float = 1.0
    omega0: float = 1.0
    gamma: float = 1.0
    g: float = 100.0

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError(f"coupling g must be positive, got {self.g}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def ratio(self) -> float:
        return self.gamma / self.g

    def key(self) -> str:
        return f"{self.omega!r}_{self.omega0!r}_{self.gamma!r}_{self.g!r}"


WEAK = TwoModeParams(gamma=1.0, g=100.0)
STRONG = TwoModeParams(gamma=5.0, g=1.0)


def block_matrix(params: TwoModeParams, big_n: int) -> np.ndarray:
    """Dense block of H for total number big_n in the basis |N - n; n>."""
    d, e = _block_bands(params, big_n)
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


def _block_bands(params: TwoModeParams, big_n: int):
    n = np.arange(big_n + 1, dtype=float)
    diag = params.omega * (big_n - n) + params.omega0 * n + params.gamma * n * (n - 1)
    off = params.g * np.sqrt((big_n - n[:-1]) * (n[:-1] + 1))
    return diag, off


def angular_momentum_block(params: TwoModeParams, big_n: int) -> np.ndarray:
    """Block of H assembled from J_z, J_x = (J+ + J-)/2 with J+ = a^dag b.

    H = (omega + omega0 - gamma) N/2 + (omega - omega0 + gamma) J_z
        + gamma (N - 2 J_z)^2 / 4 + 2 g J_x
    """
    n = np.arange(big_n + 1, dtype=float)
    jz = np.diag(0.5 * ((big_n - n) - n))
    # J+ |N-n; n> = sqrt((N-n+1) n) |N-n+1; n-1>
    jplus = np.zeros((big_n + 1, big_n + 1))
    for k in range(1, big_n + 1):
        jplus[k - 1, k] = math.sqrt((big_n - k + 1) * k)
    jx = 0.5 * (jplus + jplus.T)
    ntot = big_n * np.eye(big_n + 1)
    shifted = ntot - 2.0 * jz
    return (
        0.5 * (params.omega + params.omega0 - params.gamma) * ntot
        + (params.omega - params.omega0 + params.gamma) * jz
        + 0.25 * params.gamma * shifted @ shifted
        + 2.0 * params.g * jx
    )


@dataclass(frozen=True)
class BlockEigensystem:
    params: TwoModeParams
    values: tuple  # values[N] -> (N+1,) eigenvalues
    vectors: tuple  # vectors[N] -> (N+1, N+1); column s is eigenvector s

    @property
    def n_tot_max(self) -> int:
        return len(self.values) - 1

    def residuals(self) -> np.ndarray:
        """max_s ||H_N v_s - lambda_s v_s|| / ||H_N|| per block."""
        out = []
        for big_n, (lam, vec) in enumerate(zip(self.values, self.vectors)):
            h = block_matrix(self.params, big_n)
            scale = max(np.linalg.norm(h, 2), 1e-300)
            res = np.linalg.norm(h @ vec - vec * lam, axis=0).max()
            out.append(res / scale)
        return np.array(out)

    def orthogonality(self) -> np.ndarray:
        return np.array([np.abs(v.T @ v - np.eye(len(v))).max() for v in self.vectors])

    def save(self, path) -> None:
        arrays = {f"lam{k}": v for k, v in enumerate(self.values)}
        arrays.update({f"vec{k}": v for k, v in enumerate(self.vectors)})
        np.savez(path, key=np.array(self._cache_key()), **arrays)

    def _cache_key(self) -> str:
        return f"{self.params.key()}_{self.n_tot_max}"

    @classmethod
    def load(cls, path, params: TwoModeParams, n_tot_max: int) -> "BlockEigensystem":
        with np.load(path) as data:
            key = str(data["key"])
            expected = f"{params.key()}_{n_tot_max}"
            if key != expected:
                raise DomainError(f"eigensystem cache key {key} does not match {expected}")
            vals = tuple(data[f"lam{k}"] for k in range(n_tot_max + 1))
            vecs = tuple(data[f"vec{k}"] for k in range(n_tot_max + 1))
        return cls(params, vals, vecs)


def diagonalize_blocks(params: TwoModeParams, n_tot_max: int, method: str = "ql") -> BlockEigensystem:
    if n_tot_max < 0:
        raise DomainError("n_tot_max must be >= 0")
    vals, vecs = [], []
    for big_n in range(n_tot_max + 1):
        d, e = _block_bands(params, big_n)
        try:
            lam, vec = tridiagonal_eigh(d, e, method=method)
        except NumericalError as exc:
            raise NumericalError(f"block N={big_n}: {exc}") from exc
        vals.append(lam)
        vecs.append(vec)
    return BlockEigensystem(params, tuple(vals), tuple(vecs))


@dataclass(frozen=True)
class ProductInitialState:
    """Field in ``field``; oscillator b in its ground state."""

    field: ModeSpec

    def field_amplitudes(self, n_tot_max: int) -> np.ndarray:
        base = make_state(self.field, tol=TAIL_TOL * 1e-6).amps
        out = np.zeros(n_tot_max + 1, dtype=complex)
        top = min(len(base), n_tot_max + 1)
        out[:top] = base[:top]
        return out


def required_n_tot(initial: ProductInitialState, tol: float = TAIL_TOL) -> int:
    return truncation_size(initial.field, tol)


@dataclass(frozen=True)
class TwoModeState:
    """Coefficients over the eigenbasis |psi_Ns> at time t."""

    eig: BlockEigensystem
    coeffs: tuple  # coeffs[N] -> (N+1,) complex
    t: float

    def norm(self) -> float:
        return float(math.sqrt(sum(np.sum(np.abs(c) ** 2) for c in self.coeffs)))

    def block_amplitudes(self, big_n: int) -> np.ndarray:
        """Amplitudes on |N - n; n>, n = 0..N."""
        return self.eig.vectors[big_n] @ self.coeffs[big_n]

    def amplitude_matrix(self, pad: int = 0) -> np.ndarray:
        """A[na, nb] = <na; nb|psi>, zero-padded by ``pad`` in both modes."""
        size = self.eig.n_tot_max + 1 + pad
        amat = np.zeros((size, size), dtype=complex)
        for big_n in range(self.eig.n_tot_max + 1):
            n = np.arange(big_n + 1)
            amat[big_n - n, n] = self.block_amplitudes(big_n)
        return amat


def _check_tail(initial: ProductInitialState, n_tot_max: int) -> None:
    needed = required_n_tot(initial)
    if needed > n_tot_max:
        p = np.abs(initial.field_amplitudes(needed)) ** 2
        raise CapacityError(f"initial weight beyond N={n_tot_max} is {p[n_tot_max + 1:].sum():.3e}")


def _initial_overlaps(initial: ProductInitialState, eig: BlockEigensystem) -> list:
    _check_tail(initial, eig.n_tot_max)
    c = initial.field_amplitudes(eig.n_tot_max)
    # |N; 0> is basis vector n = 0 of block N
    return [eig.vectors[big_n][0, :] * c[big_n] for big_n in range(eig.n_tot_max + 1)]


def evolve(initial: ProductInitialState, eig: BlockEigensystem, t: float) -> TwoModeState:
    overlaps = _initial_overlaps(initial, eig)
    coeffs = tuple(ov * np.exp(-1j * lam * t) for ov, lam in zip(overlaps, eig.values))
    return TwoModeState(eig, coeffs, t)


@dataclass(frozen=True)
class ReducedDensityMatrix:
    side: str  # "field_a" or "atom_b"
    rho: np.ndarray
    t: float

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)


def reduced_density(state: TwoModeState, side: str) -> ReducedDensityMatrix:
    amat = state.amplitude_matrix()
    if side == "field_a":
        rho = amat @ amat.conj().T
    elif side == "atom_b":
        rho = amat.T @ amat.conj()
    else:
        raise DomainError(f"side must be 'field_a' or 'atom_b', got {side!r}")
    return ReducedDensityMatrix(side, 0.5 * (rho + rho.conj().T), state.t)


def _entropies_from_spectrum(lam: np.ndarray):
    if np.min(lam) < NEGATIVE_EIGEN_LIMIT:
        raise ConsistencyError(f"reduced density matrix has eigenvalue {np.min(lam):.3e}")
    lam = np.where(lam < EIGEN_CLAMP, 0.0, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, lam * np.log(np.where(lam > 0, lam, 1.0)), 0.0)
    svne = -np.sum(terms, axis=-1)
    sle = 1.0 - np.sum(lam**2, axis=-1)
    return svne, sle


def entropies(rho: ReducedDensityMatrix):
    """(von Neumann entropy, linear entropy)."""
    svne, sle = _entropies_from_spectrum(rho.eigenvalues())
    return float(svne), float(sle)


def _block_time_amplitudes(overlaps, eig, t_grid):
    """Yield (N, amps) with amps[T, n] on |N - n; n> for all times."""
    t_grid = np.asarray(t_grid, dtype=float)
    for big_n in range(eig.n_tot_max + 1):
        ov = overlaps[big_n]
        if not np.any(ov):
            continue
        phases = np.exp(-1j * np.outer(t_grid, eig.values[big_n]))
        yield big_n, (phases * ov) @ eig.vectors[big_n].T


def entropy_series(initial: ProductInitialState, eig: BlockEigensystem, t_grid, chunk: int = 2048):
    """(svne, sle) at every time, from the Schmidt spectrum of A[na, nb]."""
    t_grid = np.asarray(t_grid, dtype=float)
    overlaps = _initial_overlaps(initial, eig)
    size = eig.n_tot_max + 1
    svne = np.empty(len(t_grid))
    sle = np.empty(len(t_grid))
    for start in range(0, len(t_grid), chunk):
        ts = t_grid[start : start + chunk]
        amat = np.zeros((len(ts), size, size), dtype=complex)
        for big_n, amps in _block_time_amplitudes(overlaps, eig, ts):
            n = np.arange(big_n + 1)
            amat[:, big_n - n, n] = amps
        sv = np.linalg.svd(amat, compute_uv=False)
        s, l = _entropies_from_spectrum(sv**2)
        svne[start : start + len(ts)] = s
        sle[start : start + len(ts)] = l
    return svne, sle


def number_series(initial: ProductInitialState, eig: BlockEigensystem, t_grid):
    """(<a^dag a>, <b^dag b>) at every time in ``t_grid``."""
    overlaps = _initial_overlaps(initial, eig)
    t_grid = np.asarray(t_grid, dtype=float)
    na = np.zeros(len(t_grid))
    nb = np.zeros(len(t_grid))
    for big_n, amps in _block_time_amplitudes(overlaps, eig, t_grid):
        prob = np.abs(amps) ** 2
        n = np.arange(big_n + 1)
        nb += prob @ n
        na += prob @ (big_n - n)
    return na, nb


def mean_photon_series(initial: ProductInitialState, params: TwoModeParams, gt_grid, eig=None):
    """<a^dag a> and <b^dag b> sampled on a uniform grid of g*t.

    Returns two TimeSeries whose ``dt`` is the step in g*t.
    """
    gt = np.asarray(gt_grid, dtype=float)
    if len(gt) < 2:
        raise DomainError("time grid needs at least two samples")
    steps = np.diff(gt)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1.0):
        raise DomainError("time grid must be uniform")
    if eig is None:
        eig = diagonalize_blocks(params, required_n_tot(initial))
    na, nb = number_series(initial, eig, gt / params.g)
    dt = float(steps[0])
    return TimeSeries(na, dt, "mean_na"), TimeSeries(nb, dt, "mean_nb")


def _lower(amat, axis):
    out = np.zeros_like(amat)
    k = np.sqrt(np.arange(1, amat.shape[axis]))
    if axis == 0:
        out[:-1] = k[:, None] * amat[1:]
    else:
        out[:, :-1] = k[None, :] * amat[:, 1:]
    return out


def _raise(amat, axis):
    out = np.zeros_like(amat)
    k = np.sqrt(np.arange(1, amat.shape[axis]))
    if axis == 0:
        out[1:] = k[:, None] * amat[:-1]
    else:
        out[:, 1:] = k[None, :] * amat[:, :-1]
    return out


def _power(op, amat, axis, q):
    for _ in range(q):
        amat = op(amat, axis)
    return amat


def exchange_current(state: TwoModeState) -> float:
    """<J_y> with J_y = -i(a^dag b - a b^dag)/2."""
    amat = state.amplitude_matrix(pad=1)
    ab = _raise(_lower(amat, 1), 0)  # a^dag b |psi>
    val = -0.5j * (np.vdot(amat, ab) - np.vdot(ab, amat))
    return float(np.real(val))


@dataclass(frozen=True)
class QuadratureStats:
    mean_xi: float
    mean_eta: float
    var_xi: float
    skew3_xi: float
    d_q: float


def _expect(amat, bmat) -> float:
    return float(np.real(np.vdot(amat, bmat)))


def quadrature_stats(state: TwoModeState, q: int = 2) -> QuadratureStats:
    """Moments of xi = (x_a + x_b)/2, eta = (p_a + p_b)/2 and the two-mode D_q.

    Operators act exactly on the amplitude matrix, padded so that no raising
    step falls off the truncated basis.
    """
    if q < 1:
        raise DomainError("q must be >= 1")
    amat = state.amplitude_matrix(pad=2 * q + 3)
    s2 = 2.0 * math.sqrt(2.0)

    def xi(v):
        return (_lower(v, 0) + _raise(v, 0) + _lower(v, 1) + _raise(v, 1)) / s2

    def eta(v):
        return (_lower(v, 0) - _raise(v, 0) + _lower(v, 1) - _raise(v, 1)) / (1j * s2)

    x1 = xi(amat)
    mean_xi = _expect(amat, x1)
    mean_eta = _expect(amat, eta(amat))
    centered = x1 - mean_xi * amat
    var_xi = _expect(centered, centered)
    skew3 = _expect(centered, xi(centered) - mean_xi * centered)

    def z1(v):
        return (
            _power(_lower, v, 0, q) + _power(_raise, v, 0, q) + _power(_lower, v, 1, q) + _power(_raise, v, 1, q)
        ) / s2

    zv = z1(amat)
    mean_z = _expect(amat, zv)
    var_z = _expect(zv, zv) - mean_z**2
    probs = np.abs(amat) ** 2
    idx = np.arange(amat.shape[0])
    fa = f_q_polynomial(q, idx)
    comm = 0.25 * float(np.sum(probs * (fa[:, None] + fa[None, :])))
    if abs(comm) < 1e-12:
        raise DegenerateDataError("vanishing commutator in D_q")
    half = 0.5 * comm
    return QuadratureStats(mean_xi, mean_eta, var_xi, skew3, (var_z - half) / half)


def eigenbasis_mean_a(state: TwoModeState) -> complex:
    """<a> from eigenbasis matrix elements between neighbouring blocks.

    <psi_{N-1,s'}| a |psi_{N,s}> = sum_n sqrt(N - n) d_n^{N-1,s'} d_n^{N,s}.
    """
    total = 0.0j
    eig = state.eig
    for big_n in range(1, eig.n_tot_max + 1):
        lower = eig.vectors[big_n - 1]
        upper = eig.vectors[big_n]
        n = np.arange(big_n)
        elems = lower.T @ (np.sqrt(big_n - n)[:, None] * upper[:big_n, :])
        total += np.vdot(state.coeffs[big_n - 1], elems @ state.coeffs[big_n])
    return complex(total)


SWEEP_COLUMNS = ("gt", "mean_na", "mean_nb", "svne", "sle", "mean_xi", "var_xi", "skew3_xi", "d_q")


@dataclass(frozen=True)
class ClassicalTrajectory:
    t: np.ndarray
    y: np.ndarray  # rows x, p_x, y, p_y
    energy_drift: float
    number_drift: float
    separation_slope: float | None = None


def _classical_system(params: TwoModeParams, lam: float, mass_a: float, mass_b: float):
    om, om0, g = params.omega, params.omega0, params.g
    c = g / math.sqrt(om * om0)
    root = math.sqrt(mass_a * mass_b)

    def oscillator_b(y, py):
        return py**2 / (2 * mass_b) + 0.5 * mass_b * om0**2 * y**2

    def energy(z):
        x, px, y, py = z
        eb = oscillator_b(y, py)
        return (
            px**2 / (2 * mass_a)
            + 0.5 * mass_a * om**2 * x**2
            + eb
            + lam / om0**2 * eb**2
            + c * (root * om * om0 * x * y + px * py / root)
        )

    def number(z):
        x, px, y, py = z
        return (px**2 / (2 * mass_a) + 0.5 * mass_a * om**2 * x**2) / om + oscillator_b(y, py) / om0

    def rhs(_t, z):
        x, px, y, py = z
        k = 1.0 + 2.0 * lam / om0**2 * oscillator_b(y, py)
        return [
            px / mass_a + c * py / root,
            -mass_a * om**2 * x - c * root * om * om0 * y,
            k * py / mass_b + c * px / root,
            -k * mass_b * om0**2 * y - c * root * om * om0 * x,
        ]

    return energy, number, rhs


def classical_reference(
    params: TwoModeParams,
    initial_point,
    t_span: float,
    lam: float | None = None,
    mass_a: float = 1.0,
    mass_b: float = 1.0,
    samples: int = 2001,
    perturbation: float = 1e-8,
) -> ClassicalTrajectory:
    """Integrate the classical limit of H and report conserved-quantity drift.

    With ``perturbation`` set, a second trajectory displaced in x is run too.
    The slope of ln|separation| against g*t is then reported.
    """
    from scipy.integrate import solve_ivp

    if not (t_span > 0 and math.isfinite(t_span)):
        raise DomainError("t_span must be positive and finite")
    lam = params.gamma if lam is None else lam
    energy, number, rhs = _classical_system(params, lam, mass_a, mass_b)
    z0 = np.asarray(initial_point, dtype=float)
    ts = np.linspace(0.0, t_span, samples)

    def run(start):
        sol = solve_ivp(rhs, (0.0, t_span), start, method="DOP853", rtol=1e-12, atol=1e-12, t_eval=ts)
        if not sol.success:
            raise NumericalError(f"classical integration failed: {sol.message}")
        return sol.y

    y = run(z0)
    e = np.array([energy(col) for col in y.T])
    nn = np.array([number(col) for col in y.T])
    e_drift = float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300))
    n_drift = float(np.max(np.abs(nn - nn[0])) / max(abs(nn[0]), 1e-300))
    slope = None
    if perturbation:
        y2 = run(z0 + np.array([perturbation, 0.0, 0.0, 0.0]))
        sep = np.linalg.norm(y2 - y, axis=0)
        slope = float(np.polyfit(ts * params.g, np.log(sep), 1)[0])
    return ClassicalTrajectory(ts, y, e_drift, n_drift, slope)


def classical_point_for(spec: ModeSpec, params: TwoModeParams, mass_a: float = 1.0) -> np.ndarray:
    """Phase-space point whose field action matches <a^dag a> of ``spec``."""
    nbar = mean_photon_number(spec)
    amp = math.sqrt(2.0 * nbar / (mass_a * params.omega))
    return np.array([amp * math.cos(spec.theta), -mass_a * params.omega * amp * math.sin(spec.theta), 0.0, 0.0])
