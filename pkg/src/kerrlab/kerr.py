"""Single-mode evolution under H = chi N(N-1).

Expectation values come from closed forms in the initial-state parameters.
The module also holds the brute-force Fock-space evolution used as an
independent check of those formulas.

Time enters the closed forms only through chi*t. Internally it is carried
as the revival fraction u = t/T_rev, so that chi*t = pi*u. Phases of the
form exp(2 pi i * turns) reduce their argument modulo one first, which
makes full revivals exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConsistencyError, DomainError
from .specfun import binomial, laguerre
from .states import DEFAULT_TOL, FockVector, ModeSpec, make_state

__all__ = [
    "KerrParams",
    "MomentRequest",
    "CumulantRecord",
    "moment",
    "coherent_moment",
    "normal_moments",
    "quadrature_moments",
    "central_quadrature_moments",
    "quadrature_cumulants",
    "autocorrelation",
    "fractional_revival_coefficients",
    "fractional_revival_state",
    "classical_map",
    "rotated_point",
    "moment_factor_z",
    "brute_force_evolve",
    "ladder_expectation",
    "CUMULANT_COLUMNS",
    "cumulant_sweep",
]

PHI_X = 0.0
PHI_P = -0.5 * math.pi


@dataclass(frozen=True)
class KerrParams:
    chi: float = 5.0

    def __post_init__(self):
        if not (self.chi > 0 and math.isfinite(self.chi)):
            raise DomainError(f"chi must be positive, got {self.chi}")

    @property
    def t_rev(self) -> float:
        return math.pi / self.chi

    def fraction(self, t):
        """t in units of the revival time."""
        return np.asarray(t, dtype=float) * self.chi / math.pi


@dataclass(frozen=True)
class MomentRequest:
    """Selects <a^dag^r a^(r+s)> at time t."""

    r: int
    s: int
    t: float = 0.0

    def __post_init__(self):
        if self.r < 0 or self.s < 0:
            raise DomainError("moment orders must be non-negative")


@dataclass(frozen=True)
class CumulantRecord:
    mean_x: np.ndarray
    mean_p: np.ndarray
    var_x: np.ndarray
    var_p: np.ndarray
    skew2_x: np.ndarray
    skew2_p: np.ndarray
    kurt_x: np.ndarray
    kurt_p: np.ndarray
    uncertainty_product: np.ndarray

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _cis_turns(turns):
    """exp(2 pi i * turns) with the argument reduced modulo one."""
    frac = np.mod(turns, 1.0)
    return np.exp(2j * np.pi * frac)


def moment(spec: ModeSpec, params: KerrParams, req: MomentRequest):
    """<a^dag^r a^(r+s)> at time req.t for a coherent or photon-added state.

    ``req.t`` may be an array; the result then has the same shape.
    """
    spec.require_gaussian_family("moment")
    r, s, m, nu = req.r, req.s, spec.m, spec.nu
    u = params.fraction(req.t)
    # w = exp(-2 i s chi t)
    w = _cis_turns(-s * u)
    head = spec.alpha**s * _cis_turns(-0.5 * (s - 1 + 2 * m) * s * u) * np.exp(nu * (w - 1.0))
    z = nu * w
    acc = np.zeros(np.shape(u), dtype=complex)
    for n in range(max(0, r - m), r + 1):
        ratio = math.perm(m, r - n)  # m!/(m-r+n)!
        acc = acc + binomial(r, n) * ratio * z**n * laguerre(m, s + n, -z)
    out = head * acc / laguerre(m, 0, -nu)
    return out.item() if np.ndim(out) == 0 else out


def coherent_moment(spec: ModeSpec, params: KerrParams, req: MomentRequest):
    """Coherent-state moment from its own closed form (no Laguerre sums)."""
    if spec.m != 0 or spec.fock is not None:
        raise DomainError("coherent_moment needs a coherent state")
    r, s, nu = req.r, req.s, spec.nu
    u = params.fraction(req.t)
    two_s_chi_t = 2.0 * np.pi * np.mod(s * u, 1.0)
    mag = nu**r * np.exp(-nu * (1.0 - np.cos(two_s_chi_t)))
    phase = _cis_turns(-0.5 * (s * (s - 1) + 2 * r * s) * u) * np.exp(-1j * nu * np.sin(two_s_chi_t))
    out = spec.alpha**s * mag * phase
    return out.item() if np.ndim(out) == 0 else out


def normal_moments(spec: ModeSpec, params: KerrParams, t, order: int) -> dict:
    """All <a^dag^j a^l> with j + l <= order, keyed by (j, l)."""
    base = {}
    for j in range(order + 1):
        for l in range(j, order - j + 1):
            base[(j, l)] = moment(spec, params, MomentRequest(j, l - j, t))
    out = {}
    for (j, l), val in base.items():
        out[(j, l)] = val
        out[(l, j)] = np.conj(val)
    return out


def quadrature_moments(normal: dict, phi: float, order: int) -> list:
    """Raw moments <X^n>, n = 0..order, of X = (a e^{i phi} + a^dag e^{-i phi})/sqrt 2.

    Uses the normal-ordering expansion of powers of a + a^dag.
    """
    out = []
    for n in range(order + 1):
        acc = 0.0
        for k in range(n // 2 + 1):
            p = n - 2 * k
            weight = math.factorial(n) / (math.factorial(k) * 2**k * math.factorial(p))
            inner = 0.0
            for j in range(p + 1):
                inner = inner + math.comb(p, j) * np.exp(1j * phi * (p - 2 * j)) * normal[(j, p - j)]
            acc = acc + weight * inner
        out.append(np.real(acc) / 2 ** (n / 2))
    return out


def _central(raw: list, order: int) -> list:
    mean = raw[1]
    out = []
    for k in range(order + 1):
        out.append(sum(math.comb(k, j) * raw[j] * (-mean) ** (k - j) for j in range(k + 1)))
    return out


def central_quadrature_moments(spec: ModeSpec, params: KerrParams, t, phi: float, order: int):
    """Mean and central moments <(dX)^k>, k = 0..order, of the rotated quadrature."""
    raw = quadrature_moments(normal_moments(spec, params, t, order), phi, order)
    return raw[1], _central(raw, order)


def quadrature_cumulants(spec: ModeSpec, params: KerrParams, t) -> CumulantRecord:
    normal = normal_moments(spec, params, t, 4)
    stats = {}
    for name, phi in (("x", PHI_X), ("p", PHI_P)):
        raw = quadrature_moments(normal, phi, 4)
        mu = _central(raw, 4)
        var = np.asarray(mu[2])
        if np.any(var <= 0):
            raise ConsistencyError(f"non-positive variance of {name} at t={t}")
        stats[name] = (raw[1], var, mu[3] ** 2 / var**3, mu[4] / var**2)
    return CumulantRecord(
        mean_x=stats["x"][0],
        mean_p=stats["p"][0],
        var_x=stats["x"][1],
        var_p=stats["p"][1],
        skew2_x=stats["x"][2],
        skew2_p=stats["p"][2],
        kurt_x=stats["x"][3],
        kurt_p=stats["p"][3],
        uncertainty_product=np.sqrt(stats["x"][1] * stats["p"][1]),
    )


def _weights(spec: ModeSpec, tol: float) -> np.ndarray:
    return make_state(spec, tol).probabilities()


def autocorrelation(spec: ModeSpec, params: KerrParams, t, tol: float = DEFAULT_TOL):
    """C(t) = |<psi(0)|psi(t)>|^2."""
    p = _weights(spec, tol)
    n = np.arange(len(p))
    pairs = n * (n - 1) // 2
    u = np.atleast_1d(params.fraction(t))
    overlap = _cis_turns(-np.outer(u, pairs)) @ p
    out = np.abs(overlap) ** 2
    return out.item() if np.ndim(t) == 0 else out


def fractional_revival_coefficients(k: int) -> np.ndarray:
    """Expansion coefficients of the evolution operator at T_rev/k.

    For odd k, exp(-i pi N(N-1)/k) = sum_j f_j exp(-2 pi i j N/k); for even k
    the same holds for exp(-i pi N^2/k) with coefficients g_j. Both sides are
    k-periodic in N, so a length-k discrete Fourier inversion gives them.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    big_n = np.arange(k)
    if k % 2:
        phases = _cis_turns(-big_n * (big_n - 1) / (2.0 * k))
    else:
        phases = _cis_turns(-(big_n**2) / (2.0 * k))
    j = np.arange(k)
    kernel = _cis_turns(np.outer(j, big_n) / k)
    return kernel @ phases / k


def _rotate_state(spec: ModeSpec, angle: float, n_max: int) -> np.ndarray:
    """Amplitudes of exp(i angle N)|spec> on n = 0..n_max.

    exp(i angle N)|alpha, m> = exp(i angle m)|alpha e^{i angle}, m>.
    """
    rotated = ModeSpec(nu=spec.nu, theta=spec.theta + angle, m=spec.m)
    base = make_state(rotated).amps
    out = np.zeros(n_max + 1, dtype=complex)
    top = min(len(base), n_max + 1)
    out[:top] = base[:top]
    return out * np.exp(1j * angle * spec.m)


def fractional_revival_state(spec: ModeSpec, k: int, tol: float = DEFAULT_TOL) -> FockVector:
    """State at T_rev/k assembled as a superposition of k rotated copies."""
    spec.require_gaussian_family("fractional revival")
    coef = fractional_revival_coefficients(k)
    n_max = make_state(spec, tol).n_max
    offset = 0.0 if k % 2 else math.pi / k
    amps = np.zeros(n_max + 1, dtype=complex)
    for j, cj in enumerate(coef):
        amps += cj * _rotate_state(spec, offset - 2.0 * math.pi * j / k, n_max)
    return FockVector(amps, label=f"fractional_k{k}")


def classical_map(spec: ModeSpec, params: KerrParams, t):
    """(X, P, tau) with X = <x> exp(nu(1 - cos 2 chi t)), tau = sin 2 chi t."""
    if spec.m != 0 or spec.fock is not None:
        raise DomainError("classical_map needs a coherent state")
    u = params.fraction(t)
    angle = 2.0 * np.pi * np.mod(u, 1.0)
    grow = np.exp(spec.nu * (1.0 - np.cos(angle)))
    mean_a = moment(spec, params, MomentRequest(0, 1, t))
    x = math.sqrt(2.0) * np.real(mean_a)
    p = math.sqrt(2.0) * np.imag(mean_a)
    return x * grow, p * grow, np.sin(angle)


def rotated_point(spec: ModeSpec, tau):
    """(x0, p0) rotated clockwise by nu * tau."""
    x0 = math.sqrt(2.0) * spec.alpha.real
    p0 = math.sqrt(2.0) * spec.alpha.imag
    ang = spec.nu * np.asarray(tau)
    return x0 * np.cos(ang) + p0 * np.sin(ang), -x0 * np.sin(ang) + p0 * np.cos(ang)


def moment_factor_z(spec: ModeSpec, params: KerrParams, t):
    """z_m(t) = L_m^1(-nu e^{2 i chi t})/L_m(-nu) * exp(i(2 m chi t + nu sin 2 chi t))."""
    m, nu = spec.m, spec.nu
    u = params.fraction(t)
    w = _cis_turns(u)
    angle = 2.0 * np.pi * np.mod(u, 1.0)
    phase = _cis_turns(m * u) * np.exp(1j * nu * np.sin(angle))
    return laguerre(m, 1, -nu * w) / laguerre(m, 0, -nu) * phase


def brute_force_evolve(state: FockVector, params: KerrParams, t: float) -> FockVector:
    """c_n -> exp(-i chi n(n-1) t) c_n."""
    n = np.arange(len(state.amps))
    u = float(params.fraction(t))
    return FockVector(state.amps * _cis_turns(-u * (n * (n - 1) // 2)), label=state.label)


def _lower(amps: np.ndarray, k: int) -> np.ndarray:
    """Amplitudes of a^k|psi>, exact on the truncated basis."""
    out = np.asarray(amps, dtype=complex)
    for _ in range(k):
        n = np.arange(1, len(out))
        out = np.sqrt(n) * out[1:]
    return out


def ladder_expectation(state: FockVector, r: int, s: int) -> complex:
    """<psi| a^dag^r a^(r+s) |psi> = <a^r psi | a^(r+s) psi>."""
    left = _lower(state.amps, r)
    right = _lower(state.amps, r + s)
    return complex(np.vdot(left[: len(right)], right))


CUMULANT_COLUMNS = (
    "t_over_Trev",
    "mean_x",
    "mean_p",
    "var_x",
    "var_p",
    "beta1_x",
    "beta1_p",
    "beta2_x_minus3",
    "beta2_p_minus3",
    "uncertainty_product",
    "C_t",
)


def cumulant_sweep(spec: ModeSpec, params: KerrParams, u_grid) -> dict:
    """Columns of the cumulant CSV over revival fractions ``u_grid``."""
    u = np.asarray(u_grid, dtype=float)
    t = u * params.t_rev
    rec = quadrature_cumulants(spec, params, t)
    return {
        "t_over_Trev": u,
        "mean_x": rec.mean_x,
        "mean_p": rec.mean_p,
        "var_x": rec.var_x,
        "var_p": rec.var_p,
        "beta1_x": rec.skew2_x,
        "beta1_p": rec.skew2_p,
        "beta2_x_minus3": rec.kurt_x - 3.0,
        "beta2_p_minus3": rec.kurt_p - 3.0,
        "uncertainty_product": rec.uncertainty_product,
        "C_t": autocorrelation(spec, params, t),
    }
