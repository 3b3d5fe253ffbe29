"""Pfaffian point processes of the real and quaternion-real Ginibre ensembles.

The finite-N kernel is expanded in monic skew-orthogonal polynomials built
from the scaled Hermite polynomials p_n(z) = (tau/2)^{n/2} H_n(z/sqrt(2 tau)).
Internally every polynomial is carried in the normalized form
q_n = p_n / sqrt(n!), which obeys the three-term recurrence
sqrt(n+1) q_{n+1} = z q_n - sqrt(n) tau q_{n-1} and is regular at tau = 0.

Real class (r_{2m} = r_{2m+1} = 2 sqrt(2 pi) (2m)! (1+tau))::

    K(z1, z2) = sum_m [A_m(z1) q_{2m}(z2) - q_{2m}(z1) A_m(z2)] / (2 sqrt(2 pi) (1+tau)),
    A_m = sqrt(2m+1) q_{2m+1} - sqrt(2m) q_{2m-1}.

Quaternion-real class (r_{2m} = r_{2m+1} = 2 pi (2m+1)! (1-tau))::

    K(z1, z2) = sum_m [q_{2m+1}(z1) S_m(z2) - S_m(z1) q_{2m+1}(z2)] / (2 pi (1-tau) sqrt(2m+1)),
    S_m = q_{2m} + sqrt(2m / (2m-1)) S_{m-1}.

Densities and correlations use the folded kernel f(z1) f(z2) K(z1, z2),
whose logarithmic weight is absorbed into the recurrence start so that
nothing overflows for N up to a few hundred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from . import specfun
from .det_kernels import scaled_hermite_terms
from .ensembles import SymmetryClass

__all__ = [
    "SkewBasis",
    "PfaffKernel",
    "SkewMoments",
    "pfaffian",
    "log_pfaffian",
    "f_weight",
    "log_f_weight",
    "skew_basis",
    "kernel_KN",
    "kernel_folded",
    "real_circular_kernel",
    "kernel_from_moments",
    "density_complex",
    "density_real",
    "expected_real_count",
    "correlations_upper",
    "skew_form",
    "skew_moment_matrix",
    "normalization",
    "limit_kernel",
    "weak_density_profile",
]

_SQ2PI = math.sqrt(2 * math.pi)


def _cls(symmetry_class) -> SymmetryClass:
    c = SymmetryClass(symmetry_class)
    if c is SymmetryClass.COMPLEX:
        raise ValueError("Pfaffian kernels exist for the real and quaternion classes only")
    return c


def _check_tau(tau):
    if not -1 < tau < 1:
        raise ValueError("tau must lie in (-1, 1)")
    return float(tau)


def _check_even(n):
    if int(n) != n or n < 2 or n % 2:
        raise ValueError("N must be a positive even integer")
    return int(n)


# --- Pfaffians ----------------------------------------------------------------


def _skew_ltl(a: np.ndarray):
    """Yield the pivots of a skew-symmetric Parlett-Reid elimination.

    Each step contributes a factor ``sign * pivot`` to the Pfaffian.
    """
    a = np.array(a, dtype=complex if np.iscomplexobj(a) else float, copy=True)
    n = a.shape[0]
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        sign = 1.0
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            sign = -1.0
        piv = a[k, k + 1]
        if piv == 0:
            yield sign, piv
            return
        yield sign, piv
        if k + 2 < n:
            t = a[k, k + 2:] / piv
            col = a[k + 2:, k + 1].copy()
            a[k + 2:, k + 2:] += np.outer(t, col) - np.outer(col, t)


def _check_skew(a: np.ndarray):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] % 2:
        raise ValueError("Pfaffian requires even dimension")
    norm = np.abs(a).max() if a.size else 0.0
    if np.abs(a + a.T).max(initial=0.0) > 1e-12 * max(norm, np.finfo(float).tiny):
        raise ValueError("matrix is not antisymmetric")
    return a


def pfaffian(a) -> complex | float:
    """Pfaffian of an even-dimensional antisymmetric matrix.

    Skew-symmetric Gaussian elimination with partial pivoting; O(n^3).

    Examples
    --------
    >>> pfaffian(np.array([[0.0, 2.5], [-2.5, 0.0]]))
    2.5
    """
    a = _check_skew(a)
    if a.shape[0] == 0:
        return 1.0
    out = 1.0 + 0j if np.iscomplexobj(a) else 1.0
    for sign, piv in _skew_ltl(a):
        out *= sign * piv
    return out


def log_pfaffian(a):
    """Return ``(phase, log|Pf|)`` with Pf = phase * exp(log|Pf|)."""
    a = _check_skew(a)
    phase = 1.0 + 0j if np.iscomplexobj(a) else 1.0
    logabs = 0.0
    for sign, piv in _skew_ltl(a):
        if piv == 0:
            return 0.0 * phase, -math.inf
        phase *= sign * piv / abs(piv)
        logabs += math.log(abs(piv))
    return phase, logabs


# --- weights ------------------------------------------------------------------


def log_f_weight(symmetry_class, tau: float, z):
    """log f_tau(z); -inf where the quaternion weight vanishes."""
    c = _cls(symmetry_class)
    tau = _check_tau(tau)
    z = np.asarray(z, dtype=complex)
    x, y = z.real, np.abs(z.imag)
    gauss = -x**2 / (1 + tau) - y**2 / (1 - tau)
    if c is SymmetryClass.REAL:
        # erfc(sqrt2 |y| / sqrt(1-tau^2)) e^{-(x^2-y^2)/(1+tau)} = erfcx(.) e^{gauss}
        log_f2 = np.log(special.erfcx(math.sqrt(2.0) * y / math.sqrt(1 - tau * tau))) + gauss
    else:
        with np.errstate(divide="ignore"):
            log_f2 = np.log(2 * y / math.sqrt(1 - tau * tau)) + gauss
    out = 0.5 * log_f2
    return float(out) if out.ndim == 0 else out


def f_weight(symmetry_class, tau: float, z):
    """Weight f_tau(z) >= 0 of the skew form; f(z) = f(conj z).

    Real class: f^2 = erfc(sqrt2 |y| / sqrt(1-tau^2)) exp(-(x^2-y^2)/(1+tau)).
    Quaternion class: f^2 = (2|y| / sqrt(1-tau^2)) exp(-x^2/(1+tau) - y^2/(1-tau)).
    """
    out = np.exp(log_f_weight(symmetry_class, tau, z))
    return float(out) if np.ndim(out) == 0 else out


# --- skew-orthogonal bases ----------------------------------------------------


@dataclass(frozen=True)
class SkewBasis:
    """Monic skew-orthogonal polynomials P_0 .. P_{N-1} and their norms."""

    symmetry_class: SymmetryClass
    tau: float
    N: int

    @property
    def norms(self) -> np.ndarray:
        """r_k for k < N (equal in each pair (2m, 2m+1))."""
        m = np.arange(self.N) // 2
        if self.symmetry_class is SymmetryClass.REAL:
            return np.array([2 * _SQ2PI * math.factorial(2 * j) * (1 + self.tau) for j in m])
        return np.array([2 * math.pi * math.factorial(2 * j + 1) * (1 - self.tau) for j in m])

    @cached_property
    def hermite_coeffs(self) -> np.ndarray:
        """Monomial coefficients of p_0 .. p_{N-1}; row k holds p_k."""
        n, t = self.N, self.tau
        c = np.zeros((n, n))
        c[0, 0] = 1.0
        if n > 1:
            c[1, 1] = 1.0
        for k in range(1, n - 1):
            c[k + 1, 1:] = c[k, :-1]
            c[k + 1] -= k * t * c[k - 1]
        return c

    @cached_property
    def coeffs(self) -> np.ndarray:
        """Triangular array: coeffs[k, j] is the z^j coefficient of P_k."""
        p = self.hermite_coeffs
        out = np.zeros_like(p)
        for m in range(self.N // 2):
            if self.symmetry_class is SymmetryClass.REAL:
                out[2 * m] = p[2 * m]
                out[2 * m + 1] = p[2 * m + 1] - (2 * m * p[2 * m - 1] if m else 0.0)
            else:
                out[2 * m] = p[2 * m] + (2 * m * out[2 * m - 2] if m else 0.0)
                out[2 * m + 1] = p[2 * m + 1]
        if not np.all(np.isfinite(out)):
            raise OverflowError("skew-polynomial coefficients overflow at this N")
        return out

    def evaluate(self, z) -> np.ndarray:
        """P_k(z) for all k < N, stacked along the first axis."""
        z = np.asarray(z, dtype=complex)
        return np.tensordot(self.coeffs, z[None, ...] ** np.arange(self.N).reshape((-1,) + (1,) * z.ndim), axes=1)


def skew_basis(symmetry_class, tau: float, N: int) -> SkewBasis:
    """Skew-orthogonal polynomial family of the given class.

    Real: P_{2m} = p_{2m}, P_{2m+1} = p_{2m+1} - 2m p_{2m-1}.
    Quaternion: P_{2m} = sum_{l<=m} 2^m m! / (2^l l!) p_{2l}, P_{2m+1} = p_{2m+1}.
    At tau = 0 the p_n reduce to monomials.
    """
    return SkewBasis(_cls(symmetry_class), _check_tau(tau), _check_even(N))


@dataclass(frozen=True)
class PfaffKernel:
    """Finite-N Pfaffian kernel of the real or quaternion-real ensemble."""

    symmetry_class: SymmetryClass
    N: int
    tau: float = 0.0
    basis: SkewBasis = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "symmetry_class", _cls(self.symmetry_class))
        object.__setattr__(self, "N", _check_even(self.N))
        object.__setattr__(self, "tau", _check_tau(self.tau))
        object.__setattr__(self, "basis", SkewBasis(self.symmetry_class, self.tau, self.N))

    def f(self, z):
        return f_weight(self.symmetry_class, self.tau, z)

    def log_f(self, z):
        return log_f_weight(self.symmetry_class, self.tau, z)


def _q_values(z, tau, n, log_pref):
    m, s = scaled_hermite_terms(z, tau, n)
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        return m * np.exp(s + log_pref)


def _kernel_sum(k: PfaffKernel, z1, z2, lp1, lp2):
    n, t = k.N, k.tau
    z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    lp1 = np.broadcast_to(lp1, z1.shape)
    lp2 = np.broadcast_to(lp2, z2.shape)
    q1 = _q_values(z1, t, n, lp1)
    q2 = _q_values(z2, t, n, lp2)
    out = np.zeros(z1.shape, dtype=complex)
    if k.symmetry_class is SymmetryClass.REAL:
        for m in range(n // 2):
            a1 = math.sqrt(2 * m + 1) * q1[2 * m + 1]
            a2 = math.sqrt(2 * m + 1) * q2[2 * m + 1]
            if m:
                a1 = a1 - math.sqrt(2 * m) * q1[2 * m - 1]
                a2 = a2 - math.sqrt(2 * m) * q2[2 * m - 1]
            out += a1 * q2[2 * m] - q1[2 * m] * a2
        out /= 2 * _SQ2PI * (1 + t)
    else:
        s1 = np.zeros_like(out)
        s2 = np.zeros_like(out)
        for m in range(n // 2):
            c = math.sqrt(2 * m / (2 * m - 1)) if m else 0.0
            s1 = q1[2 * m] + c * s1
            s2 = q2[2 * m] + c * s2
            out += (q1[2 * m + 1] * s2 - s1 * q2[2 * m + 1]) / math.sqrt(2 * m + 1)
        out /= 2 * math.pi * (1 - t)
    if not np.all(np.isfinite(out)):
        raise OverflowError("kernel evaluation overflowed")
    return out


def _scalar(out):
    return complex(out) if np.ndim(out) == 0 else out


def kernel_KN(k: PfaffKernel, z1, z2):
    """Finite-N kernel K_N(z1, z2) from the skew-orthogonal expansion; antisymmetric."""
    return _scalar(_kernel_sum(k, z1, z2, 0.0, 0.0))


def kernel_folded(k: PfaffKernel, z1, z2):
    """f(z1) f(z2) K_N(z1, z2), evaluated without intermediate overflow."""
    lp1 = k.log_f(np.asarray(z1, dtype=complex))
    lp2 = k.log_f(np.asarray(z2, dtype=complex))
    return _scalar(_kernel_sum(k, z1, z2, lp1, lp2))


def real_circular_kernel(N: int, z1, z2):
    """Closed form of the real Ginibre kernel: (z1 - z2) e_{N-1}(z1 z2) / (2 sqrt(2 pi)).

    e_{N-1} is the exponential series truncated after the power N-2.
    """
    if int(N) != N or N < 2:
        raise ValueError("N must be an integer >= 2")
    z1, z2 = complex(z1), complex(z2)
    return (z1 - z2) / (2 * _SQ2PI) * specfun.truncated_exp(N - 1, z1 * z2)


def kernel_from_moments(moments: "SkewMoments", z1, z2) -> complex:
    """K_N(z1, z2) = sum_{k,l} (A^{-1})_{kl} z1^{k-1} z2^{l-1}."""
    n = moments.A.shape[0]
    p = np.arange(n)
    return complex(np.asarray(complex(z1)) ** p @ moments.A_inv @ np.asarray(complex(z2)) ** p)


# --- densities ----------------------------------------------------------------


def density_complex(k: PfaffKernel, z, method: str = "kernel"):
    """Density of complex eigenvalues R^C(z) = 2 f(z) f(z*) |K_N(z, z*)| for Im z > 0.

    ``method="closed"`` uses the closed form available for the real class at
    tau = 0: (2|y|/sqrt(2 pi)) e^{2y^2} erfc(sqrt2 |y|) Q(N-1, |z|^2).
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("density_complex needs Im z > 0")
    if method == "closed":
        if k.symmetry_class is not SymmetryClass.REAL or k.tau != 0:
            raise ValueError("closed form exists for the real circular ensemble only")
        y = np.abs(z.imag)
        out = (2 * y / _SQ2PI) * special.erfcx(math.sqrt(2.0) * y) * specfun.regularized_upper_gamma(
            k.N - 1, np.abs(z) ** 2
        )
    elif method == "kernel":
        out = 2 * np.abs(kernel_folded(k, z, np.conj(z)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out) if np.ndim(out) == 0 else out


def _real_density_closed(N: int, x: float) -> float:
    x2 = x * x
    first = specfun.regularized_upper_gamma(N - 1, x2) / _SQ2PI
    if x == 0:
        return first
    a = (N - 1) / 2
    log_second = (
        -x2 / 2
        + (2 * N - 2) * math.log(abs(x))
        + _log_lower_gamma_star(a, x2 / 2)
        - (N - 0.5) * math.log(2.0)
        - math.lgamma(N / 2)
    )
    return first + math.exp(log_second)


def _log_lower_gamma_star(a, x):
    # log of gamma*(a, x); the log keeps x^{-a}-sized values representable
    if x < 600:
        v = specfun.lower_gamma_star(a, x)
        if v > 0:
            return math.log(v)
    # x^{-a} P(a, x) with P -> 1 - Q
    return -a * math.log(x) + math.log1p(-special.gammaincc(a, x))


def _real_density_quad(k: PfaffKernel, x: float) -> float:
    # R^R(x) = int f(t) f(x) K_N(t, x) sgn(t - x) dt
    def g(t):
        return kernel_folded(k, t, x).real

    span = math.sqrt(k.N * (1 + abs(k.tau))) + 12.0 * math.sqrt(1 + abs(k.tau))
    lo, hi = min(-span, x - 1), max(span, x + 1)
    opts = dict(epsabs=1e-13, epsrel=1e-11, limit=400)
    right = integrate.quad(g, x, hi, **opts)[0]
    left = integrate.quad(g, lo, x, **opts)[0]
    return right - left


def density_real(k_or_N, x, method: str = "auto"):
    """Density of real eigenvalues R^R(x) for the real class.

    Parameters
    ----------
    k_or_N : PfaffKernel or int
        An int selects the circular ensemble of that size.
    x : float or array_like
        Point(s) on the real axis.
    method : {"auto", "closed", "quadrature"}
        ``"closed"`` is the circular closed form with
        gamma*((N-1)/2, x^2/2); ``"quadrature"`` integrates the folded kernel
        against the sign function. ``"auto"`` uses the closed form at tau = 0.
    """
    k = PfaffKernel("real", k_or_N) if isinstance(k_or_N, (int, np.integer)) else k_or_N
    if k.symmetry_class is SymmetryClass.QUATERNION:
        return 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else 0.0
    if method == "auto":
        method = "closed" if k.tau == 0 else "quadrature"
    if method == "closed":
        if k.tau != 0:
            raise ValueError("closed form exists for tau = 0 only")
        fn = lambda t: _real_density_closed(k.N, t)  # noqa: E731
    elif method == "quadrature":
        fn = lambda t: _real_density_quad(k, t)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.ndim(x) == 0:
        return fn(float(x))
    return np.vectorize(fn, otypes=[float])(np.asarray(x, dtype=float))


def expected_real_count(N: int) -> float:
    """Mean number of real eigenvalues of an N x N real Ginibre matrix.

    1 + (sqrt2/pi) int_0^1 t^{1/2} (1 - t^{N-1}) / ((1-t)^{3/2} (1+t)) dt,
    integrated after the substitution t = sin^2(theta), which removes the
    endpoint singularity.
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    if N == 1:
        return 1.0

    def g(th):
        s2 = math.sin(th) ** 2
        c2 = math.cos(th) ** 2
        ratio = (N - 1) if c2 == 0 else -math.expm1((N - 1) * math.log1p(-c2)) / c2
        return 2 * s2 * ratio / (1 + s2)

    val = integrate.quad(g, 0, math.pi / 2, epsabs=0, epsrel=1e-13, limit=400)[0]
    return 1 + math.sqrt(2) / math.pi * val


def correlations_upper(k: PfaffKernel, points: Sequence[complex]) -> float:
    """n-point correlation of complex eigenvalues at upper-half-plane points.

    Pfaffian of the 2n x 2n matrix with 2x2 blocks [[K_kl, G_kl], [-G_lk, W_kl]],
    K_kl = K(z_k, z_l), G_kl = -2i f(z_l)^2 K(z_k, conj z_l),
    W_kl = -4 f(z_k)^2 f(z_l)^2 K(conj z_k, conj z_l). The f factors are
    redistributed symmetrically, which leaves the Pfaffian unchanged.
    """
    z = np.asarray(points, dtype=complex).ravel()
    n = z.size
    if not 1 <= n <= 4:
        raise ValueError("between 1 and 4 points are supported")
    if np.any(z.imag <= 0):
        raise ValueError("points must lie strictly in the upper half-plane")
    zc = np.conj(z)
    kk = kernel_folded(k, z[:, None], z[None, :])
    gg = -2j * kernel_folded(k, z[:, None], zc[None, :])
    ww = -4.0 * kernel_folded(k, zc[:, None], zc[None, :])
    q = np.zeros((2 * n, 2 * n), dtype=complex)
    q[0::2, 0::2] = kk
    q[0::2, 1::2] = gg
    q[1::2, 0::2] = -gg.T
    q[1::2, 1::2] = ww
    # enforce exact antisymmetry of the diagonal blocks against rounding
    q = 0.5 * (q - q.T)
    pf = pfaffian(q)
    scale = np.prod(np.abs(np.diagonal(gg))) + np.finfo(float).tiny
    if abs(pf.imag) > 1e-8 * max(abs(pf.real), scale):
        raise ArithmeticError(f"Pfaffian has a non-negligible imaginary part {pf.imag:.3g}")
    return float(pf.real)


# --- skew form and moments ----------------------------------------------------


@dataclass(frozen=True)
class SkewMoments:
    """Moment matrix A_kl of the skew form and its inverse."""

    A: np.ndarray
    A_inv: np.ndarray


def _gl(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def skew_form(symmetry_class, tau: float, ca, cb, box: Optional[float] = None, order: int = 160) -> float:
    """<a, b> = int int F(z1, z2) a(z1) b(z2) for real-coefficient polynomials.

    ``ca`` and ``cb`` are monomial coefficient vectors (constant term first).
    The pair part is integrated over the upper half-plane as
    2i int f^2 [a(z) b(z*) - a(z*) b(z)]; the real-line part is
    int int f(x1) f(x2) sgn(x2 - x1) a(x1) b(x2), evaluated as
    2 int b f G_a - (int a f)(int b f) with G_a the running integral of a f.
    Both use tensor Gauss-Legendre rules on a truncated box.
    """
    c = _cls(symmetry_class)
    tau = _check_tau(tau)
    ca = np.asarray(ca, dtype=float)
    cb = np.asarray(cb, dtype=float)
    deg = max(len(ca), len(cb))
    if box is None:
        box = math.sqrt(deg * (1 + abs(tau))) + 10.0
    pa = np.polynomial.Polynomial(ca)
    pb = np.polynomial.Polynomial(cb)

    xs, wx = _gl(order, -box, box)
    ys, wy = _gl(order, 0.0, box)
    zz = xs[:, None] + 1j * ys[None, :]
    f2 = np.exp(2 * log_f_weight(c, tau, zz))
    integrand = 2j * f2 * (pa(zz) * pb(np.conj(zz)) - pa(np.conj(zz)) * pb(zz))
    pair = np.real(np.einsum("i,j,ij->", wx, wy, integrand))
    if c is SymmetryClass.QUATERNION:
        return float(pair)

    fx = np.exp(log_f_weight(c, tau, xs + 0j))
    ga = pa(xs) * fx
    gb = pb(xs) * fx
    # running integral G_a(x) = int_{-box}^{x} a f, one mapped rule per node
    nodes, weights = np.polynomial.legendre.leggauss(order)
    run = np.empty_like(xs)
    for i, x in enumerate(xs):
        t = 0.5 * (x + box) * nodes + 0.5 * (x - box)
        run[i] = 0.5 * (x + box) * np.sum(weights * pa(t) * np.exp(log_f_weight(c, tau, t + 0j)))
    line = 2 * np.sum(wx * gb * run) - np.sum(wx * ga) * np.sum(wx * gb)
    return float(pair + line)


def _a_k(k):
    return 2 ** (k / 2) * math.gamma(k / 2)


def _eps(n):
    e = np.zeros((n, n))
    for i in range(n - 1):
        e[i + 1, i] = 1.0
        e[i, i + 1] = -1.0
    return e


def _eps_inv(n):
    # upper triangle (1-based k < j): 1 when k is odd and j is even
    e = np.zeros((n, n))
    for k in range(1, n + 1):
        for j in range(k + 1, n + 1):
            if k % 2 == 1 and j % 2 == 0:
                e[k - 1, j - 1] = 1.0
                e[j - 1, k - 1] = -1.0
    return e


def skew_moment_matrix(symmetry_class, tau: float, N: int, form: str = "closed") -> SkewMoments:
    """Moment matrix A_kl = <z^{k-1}, z^{l-1}> and its inverse.

    At tau = 0 closed forms are used: for the real class A = D eps^{-1} D
    with D = diag(a_k), a_k = 2^{k/2} Gamma(k/2), so A^{-1} = D^{-1} eps D^{-1};
    for the quaternion class either the tridiagonal display
    2 pi (k! delta_{k,l-1} - l! delta_{l,k-1}) (``form="closed"``) or
    -sqrt(pi/2) a_{k+1} a_{l+1} eps_kl (``form="duplication"``).
    Other tau use numeric skew-form integration of monomials (N <= 10).
    """
    c = _cls(symmetry_class)
    tau = _check_tau(tau)
    N = _check_even(N)
    if tau == 0 and form != "numeric":
        if c is SymmetryClass.REAL:
            d = np.array([_a_k(k) for k in range(1, N + 1)])
            A = d[:, None] * _eps_inv(N) * d[None, :]
            A_inv = _eps(N) / (d[:, None] * d[None, :])
            return SkewMoments(A, A_inv)
        if form == "duplication":
            d = np.array([_a_k(k + 1) for k in range(1, N + 1)])
            A = -math.sqrt(math.pi / 2) * d[:, None] * _eps(N) * d[None, :]
        else:
            A = np.zeros((N, N))
            for k in range(1, N):
                A[k - 1, k] = 2 * math.pi * math.factorial(k)
                A[k, k - 1] = -A[k - 1, k]
        return SkewMoments(A, np.linalg.inv(A))
    if N > 10:
        raise ValueError("numeric moment matrices are limited to N <= 10")
    A = np.zeros((N, N))
    for k in range(N):
        for l in range(k + 1, N):
            A[k, l] = skew_form(c, tau, np.eye(N)[k], np.eye(N)[l])
            A[l, k] = -A[k, l]
    return SkewMoments(A, np.linalg.inv(A))


def normalization(symmetry_class, tau: float, N: int) -> float:
    """log(1 / C_{N,tau}) of the joint eigenvalue density.

    Real: (2 sqrt(2 pi))^{N/2} 0! 2! ... (N-2)! (1+tau)^{N/2}.
    Quaternion: (2 pi)^{N/2} 1! 3! ... (N-1)! (1-tau)^{N/2}.
    """
    c = _cls(symmetry_class)
    tau = _check_tau(tau)
    N = _check_even(N)
    h = N // 2
    if c is SymmetryClass.REAL:
        return h * math.log(2 * _SQ2PI) + sum(math.lgamma(2 * j + 1) for j in range(h)) + h * math.log1p(tau)
    return h * math.log(2 * math.pi) + sum(math.lgamma(2 * j + 2) for j in range(h)) + h * math.log1p(-tau)


# --- large-N limits -------------------------------------------------------------


def _weak_integral(weight_fn, n: int, a: float, d: complex) -> complex:
    # int_0^1 weight(u) exp(-a^2 u^2) sin(sqrt(N) u d) du, split into real and imaginary parts
    sq = math.sqrt(n)

    def part(u, which):
        v = weight_fn(u) * math.exp(-(a * u) ** 2) * np.sin(sq * u * d)
        return v.real if which == 0 else v.imag

    opts = dict(epsabs=1e-300, epsrel=1e-11, limit=500)
    re = integrate.quad(part, 0, 1, args=(0,), **opts)[0]
    im = integrate.quad(part, 0, 1, args=(1,), **opts)[0] if d.imag else 0.0
    return complex(re, im)


def limit_kernel(symmetry_class, regime: str, z1, z2, tau: float = 0.0, a: float | None = None,
                 N: int | None = None) -> complex:
    """Large-N forms of K_N(z1, z2).

    regime
        ``"circular_bulk"``: real (z1-z2) e^{z1 z2} / (2 sqrt(2 pi));
        quaternion e^{z1 z2} / (2 pi (z2 - z1)).
        ``"elliptic_bulk"``: the tau-deformed bulk kernels (needs ``tau``).
        ``"weak"``: tau = 1 - a^2/N with points of order one (needs ``a``, ``N``):
        real (N / 2 pi) int_0^1 u e^{-a^2 u^2} sin(sqrt(N) u (z1-z2)) du;
        quaternion (sqrt2 N / (4 pi^{3/2} a^2)) int_0^1 u^{-1} e^{-a^2 u^2} sin(sqrt(N) u (z1-z2)) du.
    """
    c = _cls(symmetry_class)
    z1, z2 = complex(z1), complex(z2)
    if regime == "circular_bulk":
        if c is SymmetryClass.REAL:
            return (z1 - z2) * np.exp(z1 * z2) / (2 * _SQ2PI)
        if z1 == z2:
            raise ValueError("the quaternion bulk kernel has a pole at z1 = z2")
        return np.exp(z1 * z2) / (2 * math.pi * (z2 - z1))
    if regime == "elliptic_bulk":
        t = _check_tau(tau)
        d = 1 - t * t
        if c is SymmetryClass.REAL:
            return (z1 - z2) / (2 * _SQ2PI * d**1.5) * np.exp(z1 * z2 / d - t * (z1 * z1 + z2 * z2) / (2 * d))
        return np.exp((z1 * z1 + z2 * z2) / (2 * (1 + t))) * special.erf((z1 - z2) / math.sqrt(2 * d)) / (
            2 * _SQ2PI * d
        )
    if regime == "weak":
        if a is None or N is None or not a > 0:
            raise ValueError("weak regime needs a > 0 and N")
        d = z1 - z2
        if c is SymmetryClass.REAL:
            return N / (2 * math.pi) * _weak_integral(lambda u: u, N, a, d)
        # sin(sqrt(N) u d) / u is regular at u = 0
        return math.sqrt(2) * N / (4 * math.pi**1.5 * a * a) * _weak_integral(
            lambda u: 1.0 / u if u > 0 else 0.0, N, a, d
        ) if d != 0 else 0j
    raise ValueError(f"unknown regime {regime!r}")


def weak_density_profile(symmetry_class, y: float, a: float):
    """Weak non-Hermiticity density of scaled imaginary parts.

    Returns ``(singular_weight, smooth)``: the coefficient of delta(y) and the
    continuous part at y. The quaternion profile is even in y.
    """
    c = _cls(symmetry_class)
    if not a > 0:
        raise ValueError("a must be positive")
    y = abs(float(y))
    cc = y / a
    opts = dict(epsabs=0, epsrel=1e-12, limit=200)

    def pair(u):
        # e^{-y^2/a^2 - pi^2 a^2 u^2} sinh(2 pi u y), written without overflow
        return 0.5 * math.exp(-(cc - math.pi * a * u) ** 2) * -math.expm1(-4 * math.pi * u * y)

    peak = cc / (math.pi * a)
    pts = [peak] if 0 < peak < 1 else None
    if c is SymmetryClass.REAL:
        sing = integrate.quad(lambda u: math.exp(-(math.pi * a * u) ** 2), 0, 1, **opts)[0]
        if y == 0:
            return sing, 0.0
        # erfc(c) = erfcx(c) e^{-c^2}; the e^{-c^2} is already inside pair()
        smooth = math.pi * special.erfcx(cc) * integrate.quad(lambda u: u * pair(u), 0, 1, points=pts, **opts)[0]
        return sing, smooth
    if y == 0:
        return 0.0, 0.0
    val = integrate.quad(lambda u: pair(u) / u, 0, 1, points=pts, **opts)[0]
    return 0.0, y / (math.pi**1.5 * a**3) * val
