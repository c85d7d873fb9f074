"""Single-mode initial states: coherent, photon-added coherent and Fock.

Amplitudes are built in the log domain so that large mean photon numbers
(nu of order 100) do not overflow the factorials.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CapacityError, DomainError
from .specfun import laguerre

__all__ = [
    "StateKind",
    "ModeSpec",
    "FockVector",
    "make_state",
    "truncation_size",
    "photon_distribution",
    "mean_photon_number",
    "single_photon_probability",
    "phase_grid",
    "phase_distribution",
    "nonlinear_eigenrelation_residual",
    "DEFAULT_TOL",
    "HARD_CAP",
]

DEFAULT_TOL = 1e-12
HARD_CAP = 4096
PHASE_POINTS = 1024


class StateKind(str, Enum):
    COHERENT = "coherent"
    PHOTON_ADDED = "photon_added"
    FOCK = "fock"


@dataclass(frozen=True)
class ModeSpec:
    """Parameters of an initial single-mode state.

    ``nu`` is |alpha|^2 and ``theta`` is arg(alpha). ``m`` counts photon
    additions; m = 0 is the coherent state. Setting ``fock`` selects the
    number state |fock> and ignores the other fields.
    """

    nu: float = 0.0
    theta: float = 0.0
    m: int = 0
    fock: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.nu) or self.nu < 0:
            raise DomainError(f"nu must be finite and >= 0, got {self.nu}")
        if not math.isfinite(self.theta):
            raise DomainError("theta must be finite")
        if int(self.m) != self.m or self.m < 0:
            raise DomainError(f"m must be a non-negative integer, got {self.m}")
        if self.fock is not None and (int(self.fock) != self.fock or self.fock < 0):
            raise DomainError(f"fock must be a non-negative integer, got {self.fock}")
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def coherent(cls, nu: float, theta: float = 0.0) -> "ModeSpec":
        return cls(nu=nu, theta=theta, m=0)

    @classmethod
    def photon_added(cls, nu: float, m: int, theta: float = 0.0) -> "ModeSpec":
        return cls(nu=nu, theta=theta, m=m)

    @classmethod
    def number(cls, n: int) -> "ModeSpec":
        return cls(fock=n)

    @classmethod
    def from_quadratures(cls, x0: float, p0: float, m: int = 0) -> "ModeSpec":
        """State with x0 + i p0 = alpha * sqrt(2)."""
        alpha = complex(x0, p0) / math.sqrt(2.0)
        return cls(nu=abs(alpha) ** 2, theta=math.atan2(p0, x0), m=m)

    @property
    def kind(self) -> StateKind:
        if self.fock is not None:
            return StateKind.FOCK
        return StateKind.PHOTON_ADDED if self.m > 0 else StateKind.COHERENT

    @property
    def alpha(self) -> complex:
        return math.sqrt(self.nu) * complex(math.cos(self.theta), math.sin(self.theta))

    def require_gaussian_family(self, what: str) -> None:
        if self.kind is StateKind.FOCK:
            raise DomainError(f"{what} needs a coherent or photon-added state")


@dataclass(frozen=True)
class FockVector:
    """Truncated amplitude vector over |0>..|n_max>."""

    amps: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @property
    def n_max(self) -> int:
        return len(self.amps) - 1

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def number_moment(self, k: int = 1) -> float:
        n = np.arange(len(self.amps), dtype=float)
        return float(np.sum(n**k * self.probabilities()))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "re", "im"])
        for n, c in enumerate(self.amps):
            w.writerow([n, repr(float(c.real)), repr(float(c.imag))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _log_weights(spec: ModeSpec, n: np.ndarray) -> np.ndarray:
    """ln |c_n|^2 for n >= m (coherent or photon-added)."""
    nu, m = spec.nu, spec.m
    lg = np.vectorize(math.lgamma, otypes=[float])
    k = n - m
    log_norm = math.lgamma(m + 1.0) + math.log(laguerre(m, 0, -nu))
    return -nu + k * math.log(nu) + lg(n + 1.0) - 2.0 * lg(k + 1.0) - log_norm


def photon_distribution(spec: ModeSpec, n_max: int) -> np.ndarray:
    """|c_n|^2 for n = 0..n_max, without tail checks."""
    p = np.zeros(n_max + 1)
    if spec.kind is StateKind.FOCK:
        if spec.fock <= n_max:
            p[spec.fock] = 1.0
        return p
    if spec.nu == 0.0:
        if spec.m <= n_max:
            p[spec.m] = 1.0
        return p
    if spec.m <= n_max:
        n = np.arange(spec.m, n_max + 1)
        p[spec.m:] = np.exp(_log_weights(spec, n))
    return p


def truncation_size(spec: ModeSpec, tol: float = DEFAULT_TOL, cap: int = HARD_CAP) -> int:
    """Smallest N_max whose discarded tail weight is below ``tol``."""
    if not (0.0 < tol <= 1e-6):
        raise DomainError(f"tol must lie in (0, 1e-6], got {tol}")
    if spec.kind is StateKind.FOCK:
        n = spec.fock
    elif spec.nu == 0.0:
        n = spec.m
    else:
        # the weight decays faster than Poisson(nu) beyond nu + 2m; a wide
        # window followed by an exact reverse tail sum is cheap
        hi = int(spec.m + spec.nu + 2 * spec.m + 60.0 * math.sqrt(spec.nu + 1.0) + 60)
        if hi > 4 * cap:
            raise CapacityError(f"nu={spec.nu} needs more than {cap} Fock states")
        p = photon_distribution(spec, hi)
        tail = np.cumsum(p[::-1])[::-1]  # tail[n] = sum_{k >= n}
        beyond = np.append(tail[1:], 0.0)  # weight strictly above n
        n = int(np.argmax(beyond < tol))
    if n > cap:
        raise CapacityError(f"truncation needs N_max={n} > cap {cap}")
    return n


def make_state(spec: ModeSpec, tol: float = DEFAULT_TOL, cap: int = HARD_CAP) -> FockVector:
    """Fock-basis amplitudes of the state described by ``spec``."""
    n_max = truncation_size(spec, tol, cap)
    if spec.kind is StateKind.FOCK:
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[spec.fock] = 1.0
        return FockVector(amps, label=f"fock{spec.fock}")
    p = photon_distribution(spec, n_max)
    n = np.arange(n_max + 1)
    # c_n carries the phase of alpha^(n-m)
    phase = np.exp(1j * (n - spec.m) * spec.theta)
    amps = np.where(n >= spec.m, np.sqrt(p) * phase, 0.0)
    return FockVector(amps, label=f"pacs_m{spec.m}_nu{spec.nu}")


def mean_photon_number(spec: ModeSpec) -> float:
    if spec.kind is StateKind.FOCK:
        return float(spec.fock)
    m, nu = spec.m, spec.nu
    return (m + 1) * laguerre(m + 1, 0, -nu) / laguerre(m, 0, -nu) - 1.0


def single_photon_probability(spec: ModeSpec) -> float:
    """|c_1|^2 of a coherent or photon-added state."""
    spec.require_gaussian_family("single_photon_probability")
    return float(photon_distribution(spec, 1)[1])


def phase_grid(points: int = PHASE_POINTS) -> np.ndarray:
    return np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)


def phase_distribution(state: FockVector, phi_grid) -> np.ndarray:
    """P(phi) = |sum_n exp(-i n phi) c_n|^2 / (2 pi)."""
    phi = np.asarray(phi_grid, dtype=float)
    if phi.size == 0:
        raise DomainError("phase grid is empty")
    n = np.arange(len(state.amps))
    amp = np.exp(-1j * np.outer(phi, n)) @ state.amps
    return np.abs(amp) ** 2 / (2.0 * np.pi)


def nonlinear_eigenrelation_residual(state: FockVector, spec: ModeSpec) -> float:
    """Norm of (1 - m/(1 + a^dag a)) a|psi> - alpha|psi>.

    Only rows n < N_max enter: the top row would need c_{N_max+1}, which the
    truncation discarded.
    """
    spec.require_gaussian_family("eigenrelation")
    c = state.amps
    n = np.arange(len(c) - 1)
    lowered = np.sqrt(n + 1.0) * c[1:]
    lhs = (1.0 - spec.m / (1.0 + n)) * lowered
    return float(np.linalg.norm(lhs - spec.alpha * c[:-1]))
