"""Special functions used by the physics modules.

Laguerre polynomials are evaluated from their explicit finite series, which
is accurate for the modest orders (m up to a few dozen) needed here and works
unchanged for complex arguments.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "binomial",
    "log_factorial",
    "laguerre",
    "laguerre_coefficients",
    "log_falling_factorial",
]


def log_factorial(n: int) -> float:
    """Return ln(n!)."""
    if n < 0:
        raise DomainError(f"log_factorial needs n >= 0, got {n}")
    return math.lgamma(n + 1.0)


def log_falling_factorial(n: int, p: int) -> float:
    """Return ln(n!/(n-p)!) for 0 <= p <= n."""
    if p < 0 or p > n:
        raise DomainError(f"falling factorial needs 0 <= p <= n, got n={n}, p={p}")
    return math.lgamma(n + 1.0) - math.lgamma(n - p + 1.0)


def binomial(n: int, k: int) -> float:
    """Binomial coefficient C(n, k); zero when k is outside [0, n]."""
    if n < 0:
        raise DomainError(f"binomial needs n >= 0, got {n}")
    if k < 0 or k > n:
        return 0.0
    return float(math.comb(n, k))


@lru_cache(maxsize=4096)
def _coefficients(m: int, s: int) -> tuple[float, ...]:
    # c_n = C(m+s, n+s) (-1)^n / n!, built exactly as rationals then rounded once
    out = []
    for n in range(m + 1):
        num = math.comb(m + s, n + s)
        val = num / math.factorial(n)
        out.append(-val if n % 2 else val)
    return tuple(out)


def laguerre_coefficients(m: int, s: int = 0) -> np.ndarray:
    """Power-series coefficients of L_m^s(x), lowest order first."""
    if m < 0 or s < 0:
        raise DomainError(f"laguerre needs m, s >= 0, got m={m}, s={s}")
    return np.array(_coefficients(m, s))


def laguerre(m: int, s: int, x):
    """Associated Laguerre polynomial L_m^s(x).

    Accepts real or complex scalars and arrays. On x <= 0 every series term
    has the same sign and Horner evaluation is used; elsewhere the series
    cancels, so the forward three-term recurrence takes over. Both use real
    coefficients only, so ``laguerre(m, s, conj(x)) == conj(laguerre(m, s, x))``.
    """
    coeffs = laguerre_coefficients(m, s)
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise DomainError("laguerre argument must be finite")
    same_sign = (np.real(arr) <= 0) & (np.imag(arr) == 0)
    if np.all(same_sign):
        acc = np.full(arr.shape, coeffs[-1], dtype=np.result_type(arr, float))
        for c in coeffs[-2::-1]:
            acc = acc * arr + c
    else:
        acc = laguerre_table(m, s, arr)[m]
    if acc.ndim == 0:
        return acc.item()
    return acc


def laguerre_table(m_max: int, s: int, x: np.ndarray) -> np.ndarray:
    """Rows L_0^s(x) .. L_{m_max}^s(x) by the three-term recurrence.

    Used on grids where every order up to ``m_max`` is needed at once.
    """
    x = np.asarray(x)
    out = np.empty((m_max + 1,) + x.shape, dtype=np.result_type(x, float))
    out[0] = 1.0
    if m_max >= 1:
        out[1] = 1.0 + s - x
    for k in range(1, m_max):
        out[k + 1] = ((2 * k + 1 + s - x) * out[k] - (k + s) * out[k - 1]) / (k + 1)
    return out
