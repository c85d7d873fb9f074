"""Amplitude-squeezing and Hong-Mandel indicators for the Kerr evolution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kerr import KerrParams, MomentRequest, central_quadrature_moments, moment
from .specfun import binomial, laguerre
from .states import ModeSpec

__all__ = [
    "SqueezeReport",
    "f_q_polynomial",
    "mean_f_q",
    "d_q_moments",
    "d_q_cs",
    "d_q_pacs",
    "d_q_cs_half_revival",
    "hong_mandel",
    "hm_threshold",
    "quadrature_variance_static",
    "squeeze_report",
    "SQUEEZE_COLUMNS",
]

SQUEEZE_COLUMNS = ("t_over_Trev", "q", "m", "nu", "theta", "D_q", "hm_moment", "hm_threshold")


@dataclass(frozen=True)
class SqueezeReport:
    q: int
    t: float
    d_q: float
    squeezed: bool
    hm_moment: float
    hm_threshold: float


def _check_q(q: int) -> None:
    if int(q) != q or q < 1:
        raise DomainError(f"q must be a positive integer, got {q}")


def f_q_polynomial(q: int, n):
    """Diagonal value of [a^q, a^dag^q] on the number state |n>."""
    _check_q(q)
    n = np.asarray(n, dtype=float)
    acc = np.ones_like(n)
    falling = np.ones_like(n)
    for k in range(1, q):
        falling = falling * (n - k + 1)
        acc = acc + math.comb(q, k) / math.factorial(k) * falling
    out = math.factorial(q) * acc
    return out.item() if out.ndim == 0 else out


def mean_f_q(spec: ModeSpec, q: int) -> float:
    """<F_q(N)>, a constant of the motion, from the normal-ordered moments."""
    _check_q(q)
    params = KerrParams()
    acc = 1.0
    for k in range(1, q):
        nk = moment(spec, params, MomentRequest(k, 0, 0.0)).real
        acc += math.comb(q, k) / math.factorial(k) * nk
    return math.factorial(q) * acc


def d_q_moments(spec: ModeSpec, params: KerrParams, q: int, t):
    """D_q assembled from <a^2q>, <a^q> and <a^dag^q a^q>."""
    _check_q(q)
    a2q = np.real(moment(spec, params, MomentRequest(0, 2 * q, t)))
    aq = np.real(moment(spec, params, MomentRequest(0, q, t)))
    nq = np.real(moment(spec, params, MomentRequest(q, 0, t)))
    return 2.0 * (a2q - 2.0 * aq**2 + nq) / mean_f_q(spec, q)


def _angle(turns):
    return 2.0 * np.pi * np.mod(turns, 1.0)


def d_q_cs(spec: ModeSpec, params: KerrParams, q: int, t):
    """Closed form of D_q(t) for an initial coherent state."""
    _check_q(q)
    if spec.m != 0 or spec.fock is not None:
        raise DomainError("d_q_cs needs a coherent state")
    nu, th = spec.nu, spec.theta
    u = np.asarray(params.fraction(t))
    # chi*t = pi*u; each trig argument is reduced in turns before use
    s2 = np.sin(_angle(q * u)) ** 2  # sin^2(2 q chi t)
    s1 = np.sin(_angle(q * u / 2.0)) ** 2  # sin^2(q chi t)
    arg_a = _angle(q * (2 * q - 1) * u) + nu * np.sin(_angle(2 * q * u)) - 2 * q * th
    arg_b = _angle(q * (q - 1) * u / 2.0) + nu * np.sin(_angle(q * u)) - q * th
    body = 1.0 + np.exp(-2.0 * nu * s2) * np.cos(arg_a) - 2.0 * np.exp(-4.0 * nu * s1) * np.cos(arg_b) ** 2
    out = 2.0 * nu**q / mean_f_q(spec, q) * body
    return out.item() if np.ndim(out) == 0 else out


def d_q_pacs(spec: ModeSpec, params: KerrParams, q: int, t):
    """Closed form of D_q(t) for an initial photon-added coherent state."""
    _check_q(q)
    spec.require_gaussian_family("d_q_pacs")
    m, nu, th = spec.m, spec.nu, spec.theta
    u = np.asarray(params.fraction(t))
    lm = laguerre(m, 0, -nu)
    sin4 = np.sin(_angle(2 * q * u))  # sin 4 chi q t
    sin2 = np.sin(_angle(q * u))  # sin 2 chi q t
    first = 0.0
    for n in range(m + 1):
        coef = binomial(m + 2 * q, n + 2 * q) * nu ** (n + q) / math.factorial(n)
        arg = _angle((2 * m + 2 * n + 2 * q - 1) * q * u) + nu * sin4 - 2 * q * th
        first = first + coef * np.cos(arg)
    first = first * np.exp(-nu * (1.0 - np.cos(_angle(2 * q * u))))
    inner = 0.0
    for n in range(m + 1):
        coef = binomial(m + q, n + q) * nu ** (n + q / 2.0) / math.factorial(n)
        arg = _angle((q - 1 + 2 * m + 2 * n) * q * u / 2.0) + nu * sin2 - q * th
        inner = inner + coef * np.cos(arg)
    second = 2.0 * np.exp(-2.0 * nu * (1.0 - np.cos(_angle(q * u)))) / lm * inner**2
    third = 0.0
    for n in range(max(0, q - m), q + 1):
        third += binomial(q, n) * math.perm(m, q - n) * nu**n * laguerre(m, n, -nu)
    out = 2.0 * (first - second + third) / (lm * mean_f_q(spec, q))
    return out.item() if np.ndim(out) == 0 else out


def d_q_cs_half_revival(spec: ModeSpec, q: int) -> float:
    """D_q(T_rev/2) for an initial coherent state and odd q."""
    _check_q(q)
    if q % 2 == 0:
        return 0.0
    nu, th = spec.nu, spec.theta
    body = math.sin(q * th) ** 2 - math.exp(-4.0 * nu) * math.cos(q * th) ** 2
    return 4.0 * nu**q / mean_f_q(spec, q) * body


def hm_threshold(q: int) -> float:
    """Coherent-state value (2q-1)!!/2^q of the 2q-th central moment."""
    _check_q(q)
    dfact = math.prod(range(2 * q - 1, 0, -2))
    return dfact / 2.0**q


def hong_mandel(spec: ModeSpec, params: KerrParams, q: int, t):
    """(<(dx)^2q>, (2q-1)!!/2^q) at time t."""
    _check_q(q)
    _, central = central_quadrature_moments(spec, params, t, 0.0, 2 * q)
    return central[2 * q], hm_threshold(q)


def quadrature_variance_static(spec: ModeSpec, phi: float) -> float:
    """Variance of (a e^{i phi} + a^dag e^{-i phi})/sqrt 2 in the initial state."""
    spec.require_gaussian_family("quadrature_variance_static")
    m, nu = spec.m, spec.nu
    l0 = laguerre(m, 0, -nu)
    l1 = laguerre(m, 1, -nu)
    l2 = laguerre(m, 2, -nu)
    lp = laguerre(m + 1, 0, -nu)
    num = (
        2.0 * nu * (l2 * l0 - l1**2) * math.cos(2.0 * (spec.theta + phi))
        - 2.0 * nu * l1**2
        - l0**2
        + 2.0 * (m + 1) * lp * l0
    )
    return num / (2.0 * l0**2)


def squeeze_report(spec: ModeSpec, params: KerrParams, q: int, t: float) -> SqueezeReport:
    d = float(d_q_pacs(spec, params, q, t))
    hm, thr = hong_mandel(spec, params, q, t)
    return SqueezeReport(q=q, t=t, d_q=d, squeezed=d < 0, hm_moment=float(hm), hm_threshold=thr)
