"""Delay-embedding diagnostics for scalar time series.

Average mutual information picks the delay. The correlation integral gives
the scaling exponent and the embedding dimension, and Rosenstein's
nearest-neighbour divergence gives the largest Lyapunov exponent. A
windowed periodogram completes the set.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DegenerateDataError, DomainError, InsufficientScalingError

__all__ = [
    "TimeSeries",
    "EmbeddingConfig",
    "DelayFallbackWarning",
    "average_mutual_information",
    "select_delay",
    "embed",
    "correlation_sum",
    "correlation_exponent",
    "default_r_grid",
    "embedding_dimension",
    "EmbeddingDimension",
    "select_linear_region",
    "lyapunov_rosenstein",
    "divergence_curve",
    "power_spectrum",
    "read_series",
    "worker_count",
]

AMI_BINS = 64
REGION_TOL = 0.15
SATURATION_TOL = 0.1
MIN_REGION_POINTS = 5
THREADS_ENV = "KERRLAB_THREADS"


def worker_count() -> int:
    """Threads for neighbour searches, from $KERRLAB_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return -1 if n <= 0 else n


@dataclass(frozen=True)
class TimeSeries:
    samples: np.ndarray
    dt: float
    label: str = ""

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 1 or len(s) < 2:
            raise DomainError("a time series needs at least two samples")
        if not np.all(np.isfinite(s)):
            raise DomainError("time series contains non-finite samples")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return len(self.samples)

    def normalized(self) -> "TimeSeries":
        """Affinely rescaled to [0, 1]; constant series map to zeros."""
        lo, hi = self.samples.min(), self.samples.max()
        span = hi - lo
        vals = (self.samples - lo) / span if span > 0 else np.zeros_like(self.samples)
        return TimeSeries(vals, self.dt, self.label)


@dataclass(frozen=True)
class EmbeddingConfig:
    delay: int
    dim: int
    theiler: int | None = None

    def __post_init__(self):
        if self.delay < 1 or self.dim < 1:
            raise DomainError("delay and dimension must be positive")
        if self.theiler is not None and self.theiler < 0:
            raise DomainError("theiler window must be non-negative")

    @property
    def window(self) -> int:
        return self.delay if self.theiler is None else self.theiler


class DelayFallbackWarning(UserWarning):
    """The AMI curve had no interior minimum."""


def read_series(path, dt: float | None = None, label: str = "") -> TimeSeries:
    """Read a single-column or (t, value) CSV, header optional."""
    data = np.genfromtxt(path, delimiter=",", dtype=float)
    if np.isnan(data.flat[0]):
        data = data[1:]
    if data.ndim == 1:
        if dt is None:
            raise DomainError("single-column input needs dt")
        return TimeSeries(data, dt, label)
    t, vals = data[:, 0], data[:, 1]
    return TimeSeries(vals, float(t[1] - t[0]) if dt is None else dt, label)


def _rank_transform(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    ranks[order] = np.arange(len(x))
    return ranks


def average_mutual_information(series: TimeSeries, t_max: int, bins: int = AMI_BINS, rank: bool = False) -> np.ndarray:
    """I(T) in bits for T = 1..t_max from equal-width histograms."""
    x = series.samples
    if t_max < 1 or t_max >= len(x) / 2:
        raise DomainError(f"t_max must lie in [1, {len(x) / 2}), got {t_max}")
    if bins < 2:
        raise DomainError("need at least two bins")
    if rank:
        x = _rank_transform(x)
    lo, hi = x.min(), x.max()
    if hi <= lo:
        return np.zeros(t_max)
    labels = np.minimum(((x - lo) / (hi - lo) * bins).astype(int), bins - 1)
    out = np.empty(t_max)
    for lag in range(1, t_max + 1):
        a, b = labels[:-lag], labels[lag:]
        joint = np.bincount(a * bins + b, minlength=bins * bins).reshape(bins, bins) / len(a)
        pa = joint.sum(axis=1)
        pb = joint.sum(axis=0)
        nz = joint > 0
        ratio = joint[nz] / np.outer(pa, pb)[nz]
        out[lag - 1] = max(float(np.sum(joint[nz] * np.log2(ratio))), 0.0)
    return out


def select_delay(ami) -> int:
    """1-based lag of the first interior minimum of ``ami`` (ami[0] is T = 1)."""
    a = np.asarray(ami, dtype=float)
    if len(a) < 3:
        raise DomainError("need at least three AMI values")
    for i in range(1, len(a) - 1):
        if a[i - 1] > a[i] < a[i + 1]:
            return i + 1
    warnings.warn("AMI has no interior minimum; using its global minimum", DelayFallbackWarning, stacklevel=2)
    last = len(a) - 1 - int(np.argmin(a[::-1]))
    return last + 1


def embed(series: TimeSeries, cfg: EmbeddingConfig) -> np.ndarray:
    x = series.samples
    span = (cfg.dim - 1) * cfg.delay
    if span >= len(x):
        raise DomainError(f"(d-1)*delay = {span} must be below the series length {len(x)}")
    n_vec = len(x) - span
    idx = np.arange(n_vec)[:, None] + cfg.delay * np.arange(cfg.dim)[None, :]
    return x[idx]


def default_r_grid(cloud: np.ndarray, points: int = 31, decades: float = 3.0) -> np.ndarray:
    """Log-spaced radii up to the extent of the cloud."""
    span = float(np.linalg.norm(cloud.max(axis=0) - cloud.min(axis=0)))
    if span == 0:
        span = 1.0
    return span * np.logspace(-decades, 0.0, points)


def _reference_indices(n: int, n_ref: int | None) -> np.ndarray:
    if n_ref is None or n_ref >= n:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, n_ref).astype(int))


def correlation_sum(cloud: np.ndarray, r_grid, theiler: int = 0, n_ref: int | None = 4000) -> np.ndarray:
    """Fraction of point pairs closer than r, ignoring pairs within ``theiler`` samples.

    A fixed evenly spaced subset of ``n_ref`` reference points is paired with
    the whole cloud; pass ``n_ref=None`` for all pairs.
    """
    from scipy.spatial import cKDTree

    cloud = np.asarray(cloud, dtype=float)
    if cloud.ndim == 1:
        cloud = cloud[:, None]
    r = np.asarray(r_grid, dtype=float)
    n = len(cloud)
    ref = _reference_indices(n, n_ref)
    tree_all = cKDTree(cloud)
    tree_ref = cKDTree(cloud[ref])
    counts = tree_ref.count_neighbors(tree_all, r).astype(float)
    # remove the self pair and pairs inside the temporal exclusion window
    close = np.zeros(len(r))
    for lag in range(-theiler, theiler + 1):
        j = ref + lag
        ok = (j >= 0) & (j < n)
        dist = np.linalg.norm(cloud[ref[ok]] - cloud[j[ok]], axis=1)
        close += np.searchsorted(np.sort(dist), r, side="right")
    inside = np.minimum(ref, theiler) + np.minimum(n - 1 - ref, theiler) + 1
    total = float(np.sum(n - inside))
    if total <= 0:
        raise DegenerateDataError("Theiler window excludes every pair")
    return (counts - close) / total


def select_linear_region(x, y, rel_tol: float = REGION_TOL, min_points: int = MIN_REGION_POINTS, floor: float = 0.0):
    """Longest run of points whose local slopes stay near their median.

    Local slopes inside the chosen run deviate from the run median by less
    than ``rel_tol * |median| + floor``. Ties go to the earliest run.
    Returns (start, stop) as a half-open index range over the points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slopes = np.diff(y) / np.diff(x)
    k = len(slopes)
    need = min_points - 1
    best = None
    for length in range(k, need - 1, -1):
        for i in range(0, k - length + 1):
            seg = slopes[i : i + length]
            med = float(np.median(seg))
            if np.all(np.abs(seg - med) <= rel_tol * abs(med) + floor):
                best = (i, i + length + 1)
                break
        if best:
            break
    if best is None:
        raise InsufficientScalingError(f"no run of {min_points} points with slopes within {rel_tol:.0%}")
    return best


def correlation_exponent(cloud, r_grid, theiler: int = 0, n_ref: int | None = 4000, min_pairs: int = 20):
    """(zeta, (r_lo, r_hi)) from the scaling region of ln C(r) against ln r."""
    cloud = np.asarray(cloud, dtype=float)
    if len(cloud) < 500:
        raise DomainError("correlation exponent needs at least 500 points")
    r = np.asarray(r_grid, dtype=float)
    c = correlation_sum(cloud, r, theiler, n_ref)
    ref = len(_reference_indices(len(cloud), n_ref))
    # drop radii with too few pairs to count and radii where C has saturated
    keep = (c * ref * len(cloud) >= min_pairs) & (c < 1.0 - 1e-12)
    if np.count_nonzero(keep) < MIN_REGION_POINTS:
        raise InsufficientScalingError("fewer than five usable radii")
    lr, lc = np.log(r[keep]), np.log(c[keep])
    # guard against runs that straddle a gap in the kept radii
    lo, hi = select_linear_region(lr, lc, floor=0.0)
    lo, hi = _positive_region(lr, lc, lo, hi)
    zeta = float(np.polyfit(lr[lo:hi], lc[lo:hi], 1)[0])
    return zeta, (float(np.exp(lr[lo])), float(np.exp(lr[hi - 1])))


def _positive_region(x, y, lo, hi):
    if np.polyfit(x[lo:hi], y[lo:hi], 1)[0] <= 0:
        raise InsufficientScalingError("scaling region has no positive slope")
    return lo, hi


@dataclass(frozen=True)
class EmbeddingDimension:
    dim: int
    zeta: dict = field(default_factory=dict)
    delay: int = 1

    def __int__(self) -> int:
        return self.dim


def embedding_dimension(
    series: TimeSeries,
    d_max: int,
    delay: int | None = None,
    theiler: int | None = None,
    r_points: int = 31,
    n_ref: int | None = 4000,
    t_max: int | None = None,
) -> EmbeddingDimension:
    """Smallest d with |zeta(d+1) - zeta(d)| < 0.1 zeta(d)."""
    if d_max < 2:
        raise DomainError("d_max must be >= 2")
    norm = series.normalized()
    if delay is None:
        delay = select_delay(average_mutual_information(norm, t_max or _default_t_max(norm)))
    zetas = {}
    for d in range(1, d_max + 1):
        cfg = EmbeddingConfig(delay, d, theiler)
        cloud = embed(norm, cfg)
        r = np.logspace(-3.0, 0.0, r_points) * math.sqrt(d)
        zetas[d], _ = correlation_exponent(cloud, r, cfg.window, n_ref)
        if d >= 2 and abs(zetas[d] - zetas[d - 1]) < SATURATION_TOL * zetas[d - 1]:
            return EmbeddingDimension(d - 1, zetas, delay)
    raise ConvergenceError(f"correlation exponent did not saturate up to d = {d_max}: {zetas}")


def _default_t_max(series: TimeSeries) -> int:
    return int(min(300, len(series) // 3))


def divergence_curve(cloud: np.ndarray, theiler: int, k_max: int) -> np.ndarray:
    """<ln d_j(k)> for k = 0..k_max over nearest-neighbour pairs (j, nn(j))."""
    from scipy.spatial import cKDTree

    n = len(cloud)
    if n <= 2 * theiler + 2:
        raise DegenerateDataError("cloud too small for the Theiler window")
    tree = cKDTree(cloud)
    kq = min(2 * theiler + 2, n)
    dist, idx = tree.query(cloud, k=kq, workers=worker_count())
    idx = np.asarray(idx).reshape(n, kq)
    dist = np.asarray(dist).reshape(n, kq)
    far = np.abs(idx - np.arange(n)[:, None]) > theiler
    has = far.any(axis=1)
    first = np.argmax(far, axis=1)
    j = np.arange(n)[has]
    nn = idx[has, first[has]]
    if len(j) == 0:
        raise DegenerateDataError("no nearest neighbours outside the Theiler window")
    curve = np.full(k_max + 1, np.nan)
    for k in range(k_max + 1):
        ok = (j + k < n) & (nn + k < n)
        d = np.linalg.norm(cloud[j[ok] + k] - cloud[nn[ok] + k], axis=1)
        d = d[d > 0]
        if len(d):
            curve[k] = float(np.mean(np.log(d)))
    if np.all(np.isnan(curve)):
        raise DegenerateDataError("every neighbour pair has zero separation")
    return curve


def lyapunov_rosenstein(
    series: TimeSeries,
    cfg: EmbeddingConfig,
    k_max: int,
    fit: tuple[int, int] | None = None,
    floor: float = 0.0,
):
    """(lambda_max, curve) with lambda_max in inverse units of ``series.dt``.

    ``fit`` fixes the k-range of the least-squares slope; otherwise it is the
    longest run of steady local slope on the curve.
    """
    cloud = embed(series, cfg)
    if len(cloud) < 1000:
        raise DomainError("Rosenstein estimate needs at least 1000 embedded points")
    curve = divergence_curve(cloud, cfg.window, k_max)
    k = np.arange(k_max + 1, dtype=float)
    good = np.isfinite(curve)
    kk, cc = k[good], curve[good]
    if fit is None:
        try:
            lo, hi = select_linear_region(kk, cc, floor=floor)
        except InsufficientScalingError:
            lo, hi = 0, len(kk)
    else:
        lo, hi = int(np.searchsorted(kk, fit[0])), int(np.searchsorted(kk, fit[1], side="right"))
    slope = float(np.polyfit(kk[lo:hi], cc[lo:hi], 1)[0])
    return slope / series.dt, curve


def power_spectrum(series: TimeSeries, g: float | None = None):
    """One-sided Hann-windowed periodogram.

    S sums to sum((w * (x - mean))^2), the windowed signal energy. Frequencies
    are in cycles per unit of ``series.dt``, divided by ``g`` when given.
    """
    x = series.samples
    n = len(x)
    if n < 16:
        raise DomainError("power spectrum needs at least 16 samples")
    w = np.hanning(n)
    xw = (x - x.mean()) * w
    spec = np.abs(np.fft.rfft(xw)) ** 2 / n
    if n % 2 == 0:
        spec[1:-1] *= 2.0
    else:
        spec[1:] *= 2.0
    freqs = np.fft.rfftfreq(n, d=series.dt)
    if g is not None:
        freqs = freqs / g
    return freqs, spec
