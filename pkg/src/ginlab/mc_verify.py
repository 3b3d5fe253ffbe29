"""Monte Carlo estimators of eigenvalue statistics and z-score comparison.

All estimators consume an iterable of :class:`~ginlab.ensembles.Spectrum`
objects. Standard errors come from the sample-to-sample spread of the
per-sample bin counts, which accounts for correlations between eigenvalues
of the same matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .ensembles import Spectrum

__all__ = [
    "RadialProfile",
    "Histogram2D",
    "VerificationReport",
    "InsufficientSamplesError",
    "estimate_density",
    "estimate_real_density",
    "estimate_real_count",
    "estimate_pair_correlation",
    "estimate_gap",
    "compare",
    "radial_bin_average",
    "pair_ratio_bin_average",
    "poisson_stderr",
    "robust_stderr",
    "binomial_stderr",
    "MIN_DENSITY_SAMPLES",
    "MIN_GAP_EVENTS",
    "MIN_PAIR_SAMPLES",
]

MIN_DENSITY_SAMPLES = 100
MIN_GAP_EVENTS = 1000
MIN_PAIR_SAMPLES = 10_000
DEFAULT_Z_THRESHOLD = 4.0
MARGINAL_FRACTION = 0.05


class InsufficientSamplesError(ValueError):
    """The stream is too short for the requested estimator."""


def _check_edges(edges, name="bin_edges") -> np.ndarray:
    e = np.asarray(edges, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise ValueError(f"{name} needs at least two edges")
    if np.any(np.diff(e) <= 0):
        raise ValueError(f"{name} must be strictly increasing (zero-width bins rejected)")
    return e


class _Moments:
    """Running per-bin sums of counts and squared counts."""

    def __init__(self, shape):
        self.s1 = np.zeros(shape)
        self.s2 = np.zeros(shape)
        self.n = 0

    def add(self, counts):
        self.s1 += counts
        self.s2 += counts * counts
        self.n += 1

    def mean_se(self):
        n = self.n
        mean = self.s1 / n
        var = np.maximum(self.s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
        return mean, np.sqrt(var / n)


@dataclass(frozen=True)
class RadialProfile:
    """Angularly averaged density estimate on annular bins.

    ``density`` and ``stderr`` are per unit area; ``counts`` are totals over
    all samples.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    samples: int
    density: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        _check_edges(self.bin_edges)
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def areas(self) -> np.ndarray:
        return math.pi * np.diff(self.bin_edges**2)


@dataclass(frozen=True)
class Histogram2D:
    """Density estimate on a rectangular grid (used for non-rotation-invariant ensembles)."""

    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    samples: int
    density: np.ndarray
    stderr: np.ndarray

    @property
    def areas(self) -> np.ndarray:
        return np.outer(np.diff(self.x_edges), np.diff(self.y_edges))


@dataclass
class VerificationReport:
    """Outcome of comparing an exact curve with a Monte Carlo estimate.

    ``passed`` is true iff every finite |z| is at most ``threshold`` and no
    more than 5% of the compared bins fall in (3, threshold].
    """

    statistic: str
    grid: list
    exact: list
    estimate: list
    stderr: list
    z: list
    passed: bool
    threshold: float = DEFAULT_Z_THRESHOLD
    samples: int = 0
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)

    @property
    def max_abs_z(self) -> float:
        vals = [abs(v) for v in self.z if v is not None and not math.isnan(v)]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        def clean(seq):
            return [None if v is None or not math.isfinite(v) else float(v) for v in seq]

        out = {
            "statistic": self.statistic,
            "grid": [float(g) if np.ndim(g) == 0 else [float(t) for t in g] for g in self.grid],
            "exact": clean(self.exact),
            "estimate": clean(self.estimate),
            "stderr": clean(self.stderr),
            "z": clean(self.z),
            "pass": bool(self.passed),
            "threshold": self.threshold,
            "seed": self.seed,
            "samples": int(self.samples),
        }
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _is_grid_2d(grid) -> bool:
    return isinstance(grid, tuple) and len(grid) == 2


def estimate_density(spectra: Iterable[Spectrum], grid, min_samples: int = MIN_DENSITY_SAMPLES, upper_half: bool = False):
    """Per-bin density of eigenvalues (count per sample per unit area).

    Parameters
    ----------
    spectra : iterable of Spectrum
    grid : array_like or (array_like, array_like)
        Radial bin edges for an angularly averaged profile, or a pair
        ``(x_edges, y_edges)`` for a rectangular histogram.
    min_samples : int
        Streams shorter than this raise :class:`InsufficientSamplesError`.
    upper_half : bool
        For real/quaternion spectra on a 2-D grid, histogram only the
        non-real eigenvalues in the upper half plane (estimates R1^C there).

    Returns
    -------
    RadialProfile or Histogram2D
    """
    if _is_grid_2d(grid):
        xe, ye = _check_edges(grid[0], "x_edges"), _check_edges(grid[1], "y_edges")
        acc = _Moments((xe.size - 1, ye.size - 1))
        for sp in spectra:
            z = (sp.pair_reps if upper_half and not sp.complex_eigs.size else sp.all_eigenvalues())
            c, _, _ = np.histogram2d(z.real, z.imag, bins=[xe, ye])
            acc.add(c)
        _need(acc.n, min_samples)
        mean, se = acc.mean_se()
        areas = np.outer(np.diff(xe), np.diff(ye))
        return Histogram2D(xe, ye, acc.s1, acc.n, mean / areas, se / areas)
    edges = _check_edges(grid)
    if edges[0] < 0:
        raise ValueError("radial edges must be nonnegative")
    acc = _Moments(edges.size - 1)
    for sp in spectra:
        r = np.abs(sp.all_eigenvalues())
        c, _ = np.histogram(r, bins=edges)
        acc.add(c.astype(float))
    _need(acc.n, min_samples)
    mean, se = acc.mean_se()
    areas = math.pi * np.diff(edges**2)
    return RadialProfile(edges, acc.s1, acc.n, mean / areas, se / areas)


def estimate_real_density(spectra: Iterable[Spectrum], edges, min_samples: int = MIN_DENSITY_SAMPLES) -> RadialProfile:
    """Density of real eigenvalues per unit length on the bins ``edges``.

    Returned as a :class:`RadialProfile` whose ``bin_edges`` are the real
    abscissae; ``density`` is normalized by bin length.
    """
    e = _check_edges(edges)
    acc = _Moments(e.size - 1)
    for sp in spectra:
        c, _ = np.histogram(np.asarray(sp.real_eigs, dtype=float), bins=e)
        acc.add(c.astype(float))
    _need(acc.n, min_samples)
    mean, se = acc.mean_se()
    w = np.diff(e)
    return RadialProfile(e, acc.s1, acc.n, mean / w, se / w)


def _need(n, minimum):
    if n == 0:
        raise InsufficientSamplesError("empty spectra stream")
    if n < minimum:
        raise InsufficientSamplesError(f"{n} samples supplied, at least {minimum} required")


def estimate_real_count(spectra: Iterable[Spectrum]) -> tuple[float, float]:
    """Sample mean and standard error of the number of real eigenvalues."""
    counts = []
    for sp in spectra:
        if sp.complex_eigs.size:
            raise ValueError("real-eigenvalue counts need real or quaternion spectra")
        counts.append(len(sp.real_eigs))
    if not counts:
        raise InsufficientSamplesError("empty spectra stream")
    c = np.asarray(counts, dtype=float)
    se = c.std(ddof=1) / math.sqrt(c.size) if c.size > 1 else 0.0
    return float(c.mean()), float(se)


@dataclass(frozen=True)
class PairCorrelationEstimate:
    """Angle-averaged R2(z1, z1 + s e^{i theta}) / (R1(z1) R1(z1 + ...)) on radial bins."""

    bin_edges: np.ndarray
    ratio: np.ndarray
    stderr: np.ndarray
    pair_counts: np.ndarray
    samples: int
    anchor_density: float


def estimate_pair_correlation(
    spectra: Iterable[Spectrum],
    z0: complex,
    bin_edges,
    radius: float = 1.0,
    density: float = 1 / math.pi,
    min_samples: int = MIN_PAIR_SAMPLES,
) -> PairCorrelationEstimate:
    """Ordered pairs with the first point within ``radius`` of ``z0``.

    For a locally homogeneous process of density ``density`` the expected
    pair count per sample in the annulus [s0, s1) is
    ``density**2 * pi radius**2 * pi (s1**2 - s0**2) * <ratio>``, where
    ``<ratio>`` is the area-weighted bin average of R2/R1^2. Bins with no
    expected or observed pairs are reported as NaN.
    """
    edges = _check_edges(bin_edges)
    acc = _Moments(edges.size - 1)
    for sp in spectra:
        z = sp.all_eigenvalues()
        anchors = z[np.abs(z - z0) < radius]
        if anchors.size:
            d = np.abs(anchors[:, None] - z[None, :]).ravel()
            d = d[d > 0]
            c, _ = np.histogram(d, bins=edges)
        else:
            c = np.zeros(edges.size - 1)
        acc.add(c.astype(float))
    _need(acc.n, min_samples)
    mean, se = acc.mean_se()
    norm = density**2 * math.pi * radius**2 * math.pi * np.diff(edges**2)
    ratio = mean / norm
    err = se / norm
    missing = acc.s1 == 0
    ratio = np.where(missing, np.nan, ratio)
    err = np.where(missing, np.nan, err)
    return PairCorrelationEstimate(edges, ratio, err, acc.s1, acc.n, density)


def pair_ratio_bin_average(bin_edges) -> np.ndarray:
    """Area-weighted bin averages of 1 - exp(-s^2) over annuli [s0, s1)."""
    e = _check_edges(bin_edges)
    a, b = e[:-1] ** 2, e[1:] ** 2
    return 1 + (np.expm1(-b) - np.expm1(-a)) / (b - a)


@dataclass(frozen=True)
class GapEstimate:
    s_grid: np.ndarray
    H: np.ndarray
    stderr: np.ndarray
    events: int
    samples: int


def estimate_gap(
    spectra: Iterable[Spectrum],
    s_grid,
    radius: float = 0.5,
    min_events: int = MIN_GAP_EVENTS,
) -> GapEstimate:
    """Empirical survival function of the nearest-neighbour distance near the origin.

    Every eigenvalue within ``radius`` of the origin is a conditioning event;
    its distance to the nearest other eigenvalue is recorded. Weighting all
    such eigenvalues equally samples the conditional (Palm) distribution,
    which is what H(s) describes; picking only the eigenvalue closest to the
    origin would favour isolated eigenvalues. Standard errors use per-sample
    sums, since events from one matrix are correlated.
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(np.diff(s) < 0) or s[0] < 0:
        raise ValueError("s_grid must be a nondecreasing 1-D grid of nonnegative values")
    per_sample = []  # (events, exceed counts) per sample
    n_samples = 0
    for sp in spectra:
        n_samples += 1
        z = sp.all_eigenvalues()
        idx = np.flatnonzero(np.abs(z) < radius)
        if idx.size == 0:
            per_sample.append((0, np.zeros(s.size)))
            continue
        d = np.abs(z[idx, None] - z[None, :])
        d[np.arange(idx.size), idx] = np.inf
        nn = d.min(axis=1)
        per_sample.append((idx.size, (nn[:, None] > s[None, :]).sum(axis=0).astype(float)))
    if n_samples == 0:
        raise InsufficientSamplesError("empty spectra stream")
    ev = np.array([e for e, _ in per_sample], dtype=float)
    ex = np.array([c for _, c in per_sample])
    total = ev.sum()
    if total < min_events:
        raise InsufficientSamplesError(f"only {int(total)} conditioning events, at least {min_events} required")
    H = ex.sum(axis=0) / total
    H = np.where(s == 0, 1.0, H)
    # ratio-estimator (delta method) standard error
    m = n_samples
    resid = ex - H[None, :] * ev[:, None]
    se = np.sqrt((resid**2).sum(axis=0) * m / max(m - 1, 1)) / total
    return GapEstimate(s, H, se, int(total), n_samples)


def radial_bin_average(density: Callable[[float], float], bin_edges, order: int = 24) -> np.ndarray:
    """Exact bin averages (1/area) int_bin rho(r) dA for a radial density.

    Gauss-Legendre in r on each annulus; ``density`` takes a radius.
    """
    e = _check_edges(bin_edges)
    x, w = np.polynomial.legendre.leggauss(order)
    out = np.empty(e.size - 1)
    for i, (a, b) in enumerate(zip(e[:-1], e[1:])):
        r = 0.5 * (b - a) * x + 0.5 * (a + b)
        vals = np.array([density(float(t)) for t in r])
        out[i] = 0.5 * (b - a) * np.dot(w, 2 * r * vals) / (b * b - a * a)
    return out


def poisson_stderr(exact, measure, samples: int) -> np.ndarray:
    """Per-bin standard error of a density estimate if bin counts were Poisson with the exact mean.

    ``measure`` is the bin area (or length); used where the empirical
    spread is zero or rests on too few events.
    """
    ex = np.asarray(exact, dtype=float)
    m = np.asarray(measure, dtype=float)
    return np.sqrt(np.maximum(ex * m, 0.0) / samples) / m


def robust_stderr(stderr, exact, measure, samples: int, min_expected: float = 100.0) -> np.ndarray:
    """Empirical errors, replaced by :func:`poisson_stderr` in bins expecting fewer than ``min_expected`` events."""
    expected = np.asarray(exact, dtype=float) * np.asarray(measure, dtype=float) * samples
    return np.where(expected < min_expected, poisson_stderr(exact, measure, samples), stderr)


def binomial_stderr(p, events: int) -> np.ndarray:
    """sqrt(p (1-p) / events): null error of an empirical survival probability."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(np.clip(p * (1 - p), 0.0, None) / events)


def compare(
    exact: Sequence[float],
    estimate: Sequence[float],
    stderr: Sequence[float],
    z_threshold: float = DEFAULT_Z_THRESHOLD,
    statistic: str = "curve",
    grid: Optional[Sequence] = None,
    samples: int = 0,
    seed: Optional[int] = None,
    null_stderr: Optional[Sequence[float]] = None,
) -> VerificationReport:
    """Per-bin z-scores ``(estimate - exact) / stderr`` and the pass verdict.

    Bins whose estimate or error is NaN are skipped. Where the empirical
    standard error is zero (no events), ``null_stderr`` is used if given;
    a bin with zero error and estimate equal to exact scores z = 0, and one
    with zero error and a discrepancy scores z = inf.
    """
    ex = np.asarray(exact, dtype=float)
    es = np.asarray(estimate, dtype=float)
    se = np.asarray(stderr, dtype=float)
    if not (ex.shape == es.shape == se.shape):
        raise ValueError("exact, estimate and stderr grids must be aligned")
    if grid is not None and len(grid) != ex.size:
        raise ValueError("grid length does not match the curves")
    if null_stderr is not None:
        ns = np.asarray(null_stderr, dtype=float)
        if ns.shape != se.shape:
            raise ValueError("null_stderr must be aligned with stderr")
        se = np.where(se > 0, se, ns)
    z = np.full(ex.shape, np.nan)
    for i in range(ex.size):
        if not (np.isfinite(es[i]) and np.isfinite(se[i]) and np.isfinite(ex[i])):
            continue
        diff = es[i] - ex[i]
        if se[i] > 0:
            z[i] = diff / se[i]
        else:
            z[i] = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    valid = np.isfinite(z) | np.isinf(z)
    az = np.abs(z[valid])
    marginal = int(np.sum((az > 3) & (az <= z_threshold)))
    passed = bool(np.all(az <= z_threshold)) and marginal <= MARGINAL_FRACTION * max(az.size, 1)
    g = list(grid) if grid is not None else list(range(ex.size))
    return VerificationReport(
        statistic=statistic,
        grid=g,
        exact=ex.tolist(),
        estimate=es.tolist(),
        stderr=se.tolist(),
        z=z.tolist(),
        passed=passed,
        threshold=z_threshold,
        samples=samples,
        seed=seed,
        extra={"marginal_bins": marginal, "compared_bins": int(az.size)},
    )
