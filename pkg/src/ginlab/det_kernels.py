"""Determinantal kernels of the complex ensembles.

Covers the complex Ginibre ensemble, truncations of Haar unitaries and the
complex elliptic ensemble at finite N, plus the large-N limit formulas
(bulk, edge, strong and weak non-unitarity, weak non-Hermiticity).

All kernels are the symmetric form K(z1, z2) = sqrt(w(z1) w(z2)) *
sum_n p_n(z1) conj(p_n(z2)) / h_n, so K(z, z) is the eigenvalue density and
R_n = det[K(z_i, z_j)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from . import specfun
from .ensembles import EnsembleSpec, SymmetryClass, Variant

__all__ = [
    "DetKernel",
    "WeakLimitContext",
    "weight",
    "kernel",
    "density",
    "correlation",
    "ginibre_bulk_limit_correlation",
    "ginibre_edge_profile",
    "truncation_strong_density",
    "truncation_edge_profile",
    "truncation_weak_density",
    "truncation_weak_correlation",
    "semicircle_density",
    "weak_correlation",
    "weak_density",
    "mehler_closed_form",
    "scaled_hermite_terms",
]

_TAU_GINIBRE = 1e-8
_RESCALE = 1e150


@dataclass(frozen=True)
class DetKernel:
    """Evaluation context for a determinantal kernel.

    Build with :meth:`ginibre`, :meth:`elliptic` or :meth:`truncated`.
    ``degree`` is the number of polynomial terms, i.e. the matrix size N
    (or M for truncations).
    """

    ensemble: EnsembleSpec

    def __post_init__(self):
        if self.ensemble.symmetry_class is not SymmetryClass.COMPLEX:
            raise ValueError("determinantal kernels exist for the complex class only")
        if self.ensemble.variant is Variant.ELLIPTIC and not self.ensemble.tau < 1.0:
            raise ValueError("tau must be below 1 for the elliptic kernel")

    @classmethod
    def ginibre(cls, n: int) -> "DetKernel":
        return cls(EnsembleSpec("complex", "circular", n))

    @classmethod
    def elliptic(cls, n: int, tau: float) -> "DetKernel":
        return cls(EnsembleSpec("complex", "elliptic", n, tau=tau))

    @classmethod
    def truncated(cls, m: int, l: int) -> "DetKernel":
        return cls(EnsembleSpec("complex", "truncated_unitary", m, trunc_l=l))

    @property
    def degree(self) -> int:
        return self.ensemble.dim

    @property
    def variant(self) -> Variant:
        return self.ensemble.variant

    @property
    def tau(self) -> float:
        return self.ensemble.tau

    @property
    def trunc_l(self) -> Optional[int]:
        return self.ensemble.trunc_l


@dataclass(frozen=True)
class WeakLimitContext:
    """Weak non-Hermiticity scaling around a point x of the real axis.

    With rho = semicircle_density(N, x), local coordinates are
    z = x + zeta / rho, and the elliptic parameter is 1 - tau = alpha^2 / N
    with alpha = a sqrt(N) / rho.
    """

    a: float
    x: float
    N: int

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not abs(self.x) < 2 * math.sqrt(self.N):
            raise ValueError("x must lie inside the semicircle support")

    @property
    def rho(self) -> float:
        return semicircle_density(self.N, self.x)

    @property
    def alpha(self) -> float:
        return self.a * math.sqrt(self.N) / self.rho

    @property
    def tau(self) -> float:
        return 1.0 - self.alpha**2 / self.N

    def unfold(self, zeta):
        """Matrix-scale point z for a local coordinate zeta."""
        return self.x + np.asarray(zeta, dtype=complex) / self.rho


# --- weights ---------------------------------------------------------------


def _log_weight(k: DetKernel, z):
    z = np.asarray(z, dtype=complex)
    if k.variant is Variant.CIRCULAR:
        return -np.abs(z) ** 2
    if k.variant is Variant.ELLIPTIC:
        t = k.tau
        return -math.log(math.pi * math.sqrt(1 - t * t)) - (z.real**2 / (1 + t) + z.imag**2 / (1 - t))
    r2 = np.abs(z) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r2 < 1, (k.trunc_l - 1) * np.log1p(-np.minimum(r2, 1.0)), -np.inf)
    if k.trunc_l == 1:
        out = np.where(r2 < 1, 0.0, -np.inf)
    return out


def weight(k: DetKernel, z):
    """Weight function w(z) of the orthogonal-polynomial ensemble.

    Ginibre: exp(-|z|^2). Truncation: (1-|z|^2)^{L-1} inside the unit disk
    and 0 outside. Elliptic: exp(-x^2/(1+tau) - y^2/(1-tau)) / (pi sqrt(1-tau^2)).
    """
    out = np.exp(_log_weight(k, z))
    return float(out) if np.ndim(out) == 0 else out


# --- kernels ----------------------------------------------------------------


def scaled_hermite_terms(z, tau: float, n: int):
    """Mantissas and log scales of q_k(z) = p_k(z) / sqrt(k!), k < n.

    p_k(z) = (tau/2)^{k/2} H_k(z / sqrt(2 tau)) obeys
    p_{k+1} = z p_k - k tau p_{k-1}, which stays regular at tau = 0.
    Returns ``(m, s)`` with q_k = m[k] * exp(s[k]).
    """
    z = np.asarray(z, dtype=complex)
    m = np.zeros((n,) + z.shape, dtype=complex)
    s = np.zeros((n,) + z.shape)
    prev = np.zeros_like(z)
    cur = np.ones_like(z)
    scale = np.zeros(z.shape)
    for k in range(n):
        m[k], s[k] = cur, scale
        nxt = (z * cur - math.sqrt(k) * tau * prev) / math.sqrt(k + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            f = np.where(big, 1.0 / _RESCALE, 1.0)
            prev, cur = prev * f, cur * f
            scale = scale + np.where(big, math.log(_RESCALE), 0.0)
    return m, s


def _elliptic_kernel(k: DetKernel, z1, z2):
    n, t = k.degree, k.tau
    z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    m1, s1 = scaled_hermite_terms(z1, t, n)
    m2, s2 = scaled_hermite_terms(z2, t, n)
    base = 0.5 * (_log_weight(k, z1) + _log_weight(k, z2))
    with np.errstate(under="ignore"):
        terms = m1 * np.conj(m2) * np.exp(s1 + s2 + base)
    return terms.sum(axis=0)


def _ginibre_kernel(n, z1, z2):
    z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    w = z1 * np.conj(z2)
    base = -0.5 * (np.abs(z1) ** 2 + np.abs(z2) ** 2)
    nz = w != 0
    logw = np.log(np.where(nz, w, 1.0))
    out = np.zeros(w.shape, dtype=complex)
    for j in range(n):
        if j == 0:
            out += np.exp(base)
        else:
            with np.errstate(under="ignore"):
                out += np.where(nz, np.exp(j * logw - math.lgamma(j + 1) + base), 0.0)
    return out / math.pi


def _truncated_kernel(k: DetKernel, z1, z2):
    M, L = k.degree, k.trunc_l
    z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    if np.any(np.abs(z1) >= 1) or np.any(np.abs(z2) >= 1):
        raise ValueError("truncated-unitary kernel requires |z| < 1")
    w = z1 * np.conj(z2)
    ratio = np.vectorize(lambda v: specfun.beta_complement_ratio(v, M, L), otypes=[complex])(w)
    pref = np.exp(0.5 * (_log_weight(k, z1) + _log_weight(k, z2)))
    return (L / math.pi) * pref * ratio


def kernel(k: DetKernel, z1, z2):
    """Finite-N kernel K(z1, z2); Hermitian in its arguments.

    Ginibre kernels are summed as exp(n log(z1 conj z2) - log n!) in log
    space. Elliptic kernels use the scaled Hermite recurrence with per-point
    exponent tracking, falling back to the Ginibre sum when tau < 1e-8.
    Truncation kernels use the incomplete-beta representation and switch to
    the binomial series when |1 - z1 conj z2| < 1e-3.
    """
    if k.variant is Variant.CIRCULAR or (k.variant is Variant.ELLIPTIC and k.tau < _TAU_GINIBRE):
        out = _ginibre_kernel(k.degree, z1, z2)
    elif k.variant is Variant.ELLIPTIC:
        out = _elliptic_kernel(k, z1, z2)
    else:
        out = _truncated_kernel(k, z1, z2)
    if not np.all(np.isfinite(out)):
        raise OverflowError("kernel evaluation overflowed")
    return complex(out) if np.ndim(out) == 0 else out


def density(k: DetKernel, z):
    """One-point function R_1(z) = K(z, z)."""
    z = np.asarray(z, dtype=complex)
    if k.variant is Variant.CIRCULAR:
        out = specfun.regularized_upper_gamma(k.degree, np.abs(z) ** 2) / math.pi
    elif k.variant is Variant.TRUNCATED_UNITARY:
        out = np.vectorize(lambda v: truncation_strong_density(k.degree, k.trunc_l, v), otypes=[float])(z)
    else:
        out = np.real(kernel(k, z, z))
    return float(out) if np.ndim(out) == 0 else out


def _real_det(mat: np.ndarray, what: str) -> float:
    d = np.linalg.det(mat)
    scale = max(abs(np.prod(np.diagonal(mat))), np.finfo(float).tiny)
    if abs(d.imag) > 1e-10 * max(abs(d.real), scale):
        raise ArithmeticError(f"{what}: determinant has a non-negligible imaginary part {d.imag:.3g}")
    return float(d.real)


def correlation(k: DetKernel, points: Sequence[complex]) -> float:
    """n-point correlation R_n = det[K(z_i, z_j)] for 1 <= n <= 8 points."""
    pts = np.asarray(points, dtype=complex).ravel()
    if not 1 <= pts.size <= 8:
        raise ValueError("between 1 and 8 points are supported")
    mat = kernel(k, pts[:, None], pts[None, :])
    return _real_det(np.atleast_2d(mat), "correlation")


def ginibre_bulk_limit_correlation(points: Sequence[complex]) -> float:
    """Infinite-N Ginibre correlations at the origin.

    R_n = pi^{-n} exp(-sum |z_j|^2) det[exp(z_i conj z_j)], evaluated with
    the Gaussian factors folded into the matrix entries.
    """
    z = np.asarray(points, dtype=complex).ravel()
    if not 1 <= z.size <= 8:
        raise ValueError("between 1 and 8 points are supported")
    a = np.abs(z) ** 2
    mat = np.exp(z[:, None] * np.conj(z)[None, :] - 0.5 * (a[:, None] + a[None, :])) / math.pi
    return _real_det(mat, "bulk correlation")


def ginibre_edge_profile(x):
    """Large-N density at signed distance x past the radius sqrt(N)."""
    return specfun.erfc(math.sqrt(2.0) * np.asarray(x, dtype=float)) / (2 * math.pi)


def truncation_strong_density(M: int, L: int, z) -> float:
    """Finite-size truncation density (L/pi)(1 - I_{|z|^2}(M, L+1)) / (1-|z|^2)^2."""
    r2 = abs(complex(z)) ** 2
    if r2 >= 1:
        raise ValueError("|z| must be below 1")
    comp = 1.0 - specfun.regularized_incomplete_beta(r2, M, L + 1)
    return (L / math.pi) * comp / (1 - r2) ** 2


def truncation_edge_profile(M: int, L: int, x: float) -> float:
    """Large-M,L edge density at |z| = sqrt(alpha/(1+alpha)) + x/sqrt(M), alpha = M/L."""
    al = M / L
    return (M / (2 * math.pi)) * (1 + al) ** 2 / al * specfun.erfc(math.sqrt(2.0) * (1 + al) / math.sqrt(al) * x)


def _moment_integral(c: complex, L: int, quad_order: Optional[int]) -> complex:
    # int_0^1 exp(-c t) t^L dt
    if quad_order is None:
        re = integrate.quad(lambda t: math.exp(-c.real * t) * math.cos(c.imag * t) * t**L, 0, 1,
                            epsabs=0, epsrel=1e-13, limit=200)[0]
        im = integrate.quad(lambda t: -math.exp(-c.real * t) * math.sin(c.imag * t) * t**L, 0, 1,
                            epsabs=1e-300, epsrel=1e-13, limit=200)[0]
        return complex(re, im)
    x, wts = np.polynomial.legendre.leggauss(quad_order)
    t = 0.5 * (x + 1)
    return complex(0.5 * np.sum(wts * np.exp(-c * t) * t**L))


def truncation_weak_density(L: int, y: float, quad_order: Optional[int] = None) -> float:
    """Weak non-unitarity density with the M^2 factor stripped.

    (1/pi) (2y)^{L-1} / (L-1)! * int_0^1 exp(-2 y t) t^L dt at
    z = 1 - y/M (times a phase).
    """
    if L < 1 or not y > 0:
        raise ValueError("need L >= 1 and y > 0")
    pref = math.exp((L - 1) * math.log(2 * y) - math.lgamma(L)) / math.pi
    return pref * _moment_integral(complex(2 * y), L, quad_order).real


def truncation_weak_correlation(L: int, points: Sequence[tuple], quad_order: Optional[int] = None) -> float:
    """Weak non-unitarity n-point function for points (y_j, phi_j), M^2 factors stripped."""
    pts = [(float(y), float(p)) for y, p in points]
    if not 1 <= len(pts) <= 6:
        raise ValueError("between 1 and 6 points are supported")
    n = len(pts)
    mat = np.empty((n, n), dtype=complex)
    for i, (yi, pi_) in enumerate(pts):
        for j, (yj, pj) in enumerate(pts):
            mat[i, j] = _moment_integral(complex(yi + yj, pi_ - pj), L, quad_order)
    pref = 1.0
    for y, _ in pts:
        pref *= math.exp((L - 1) * math.log(2 * y) - math.lgamma(L)) / math.pi
    return pref * _real_det(mat, "weak truncation correlation")


# --- elliptic limits --------------------------------------------------------


def semicircle_density(N: int, x: float) -> float:
    """Semicircle density (1/pi) sqrt(N - x^2/4) on |x| <= 2 sqrt(N)."""
    x = float(x)
    if abs(x) > 2 * math.sqrt(N):
        raise ValueError("x outside the semicircle support")
    return math.sqrt(max(N - x * x / 4, 0.0)) / math.pi


def _weak_entry(a: float, d: complex) -> complex:
    # int_0^1 exp(-pi^2 a^2 u^2) cos(pi u d) du for complex d
    def f(u, part):
        v = math.exp(-(math.pi * a * u) ** 2) * np.cos(math.pi * u * d)
        return v.real if part == 0 else v.imag

    re = integrate.quad(f, 0, 1, args=(0,), epsabs=0, epsrel=1e-12, limit=200)[0]
    im = 0.0 if d.imag == 0 or d.real == 0 else integrate.quad(f, 0, 1, args=(1,), epsabs=1e-300,
                                                                 epsrel=1e-12, limit=200)[0]
    return complex(re, im)


def weak_correlation(ctx: WeakLimitContext, zetas: Sequence[complex]) -> float:
    """Weak non-Hermiticity correlation of local coordinates zeta_j.

    (sqrt(pi) a)^{-n} exp(-sum Im(zeta)^2 / a^2) det[int_0^1 e^{-pi^2 a^2 u^2}
    cos(pi u (zeta_i - conj zeta_j)) du].
    """
    z = np.asarray(zetas, dtype=complex).ravel()
    if not 1 <= z.size <= 6:
        raise ValueError("between 1 and 6 points are supported")
    a = ctx.a
    # fold exp(-(Im zeta_i^2 + Im zeta_j^2) / (2 a^2)) into each entry against overflow
    mat = np.array(
        [[_weak_entry(a, zi - np.conj(zj)) * math.exp(-(zi.imag**2 + zj.imag**2) / (2 * a * a))
          for zj in z] for zi in z]
    ) / (math.sqrt(math.pi) * a)
    return _real_det(mat, "weak correlation")


def weak_density(ctx: WeakLimitContext, zeta) -> float:
    """Weak non-Hermiticity density (depends on Im zeta only)."""
    a = ctx.a
    y = float(np.imag(zeta))
    # e^{-y^2/a^2} cosh(2 pi u y) e^{-pi^2 a^2 u^2} = (e^{-(y/a - pi a u)^2} + e^{-(y/a + pi a u)^2}) / 2
    c = abs(y) / a

    def f(u):
        return 0.5 * (math.exp(-(c - math.pi * a * u) ** 2) + math.exp(-(c + math.pi * a * u) ** 2))

    peak = min(c / (math.pi * a), 1.0)
    pts = [peak] if 0 < peak < 1 else None
    val = integrate.quad(f, 0, 1, points=pts, epsabs=0, epsrel=1e-12, limit=200)[0]
    return val / (math.sqrt(math.pi) * a)


def mehler_closed_form(tau: float, z1: complex, z2: complex) -> complex:
    """Sum over all n of tau^n H_n(z1/sqrt(2tau)) H_n(conj z2/sqrt(2tau)) / (2^n n!)."""
    if not 0 <= tau < 1:
        raise ValueError("tau must lie in [0, 1)")
    d = 1 - tau * tau
    w2 = np.conj(z2)
    return np.exp(z1 * w2 / d - tau * (z1 * z1 + w2 * w2) / (2 * d)) / math.sqrt(d)
