"""Symmetric tridiagonal eigenproblems by the implicit-shift QL algorithm."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError

__all__ = ["tridiagonal_eigh", "MAX_SWEEPS"]

MAX_SWEEPS = 60
_EPS = np.finfo(float).eps


def _ql_implicit(d: np.ndarray, e: np.ndarray, z: np.ndarray) -> None:
    """In-place QL with Wilkinson-type shifts.

    d holds the diagonal, e the sub-diagonal padded with a trailing zero, and
    z accumulates the rotations (columns become eigenvectors).
    """
    n = len(d)
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if sweeps == MAX_SWEEPS:
                raise ConvergenceError(f"QL iteration stalled at index {l}")
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                upper = z[:, i + 1].copy()
                z[:, i + 1] = s * z[:, i] + c * upper
                z[:, i] = c * z[:, i] - s * upper
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0


def tridiagonal_eigh(diag, offdiag, method: str = "ql"):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns).

    ``method="lapack"`` delegates to scipy for cross-checks and speed.
    """
    d = np.array(diag, dtype=float)
    off = np.array(offdiag, dtype=float)
    n = len(d)
    if len(off) != max(n - 1, 0):
        raise ValueError("off-diagonal must have length n - 1")
    if method == "lapack":
        from scipy.linalg import eigh_tridiagonal

        vals, vecs = eigh_tridiagonal(d, off)
    elif method == "ql":
        e = np.append(off, 0.0)
        z = np.eye(n)
        _ql_implicit(d, e, z)
        order = np.argsort(d, kind="stable")
        vals, vecs = d[order], z[:, order]
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    # fix the sign so the largest-magnitude component is positive
    if n:
        pivot = np.argmax(np.abs(vecs), axis=0)
        signs = np.sign(vecs[pivot, np.arange(n)])
        vecs = vecs * np.where(signs == 0, 1.0, signs)
    gram = vecs.T @ vecs - np.eye(n)
    if n and np.max(np.abs(gram)) > 1e-12:
        q, rr = np.linalg.qr(vecs)
        vecs = q * np.sign(np.diag(rr))
    return vals, vecs
