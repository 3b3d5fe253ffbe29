"""Gap probabilities and nearest-neighbour spacing densities at the origin.

For rotation-invariant determinantal ensembles conditioned on an eigenvalue
at 0, the probability that no other eigenvalue lies within distance s is a
product of one-dimensional factors:

* Ginibre: H(s) = prod_{n=1}^{N-1} Q(n+1, s^2)
* truncated unitary: H(s) = prod_{m=1}^{M-1} (1 - I_{s^2}(m+1, L))

The spacing density is p(s) = -dH/ds, obtained by logarithmic
differentiation of the product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import specfun
from .ensembles import EnsembleSpec

__all__ = [
    "GapCurve",
    "gap_ginibre",
    "gap_truncation",
    "nn_density",
    "nn_density_truncation",
    "gap_curve",
    "SMALL_S_SERIES",
]

# H(s) = 1 - s^4/2 + s^6/6 - s^8/24 + O(s^10) for the infinite Ginibre ensemble
SMALL_S_SERIES = {4: -1 / 2, 6: 1 / 6, 8: -1 / 24}

_INF_TRUNC = 1e-16
_N_CAP = 100_000

Size = Union[int, float]


@dataclass(frozen=True)
class GapCurve:
    """Gap probability sampled on an increasing grid."""

    ensemble: EnsembleSpec | None
    s_grid: np.ndarray
    H_values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=float)
        h = np.asarray(self.H_values, dtype=float)
        if s.shape != h.shape or s.ndim != 1:
            raise ValueError("s_grid and H_values must be 1-D and aligned")
        if np.any(np.diff(s) <= 0) or (s.size and s[0] < 0):
            raise ValueError("s_grid must be nonnegative and strictly increasing")
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "H_values", h)


def _is_inf(N) -> bool:
    return N is None or (isinstance(N, float) and math.isinf(N)) or N == "inf"


def _log_q_factors(N, x: float, threshold: float):
    """log Q(n+1, x) for n = 1, 2, ...; stops when a factor is within threshold of 1."""
    out = []
    n = 1
    while True:
        if not _is_inf(N) and n > int(N) - 1:
            break
        lq = specfun.log_regularized_upper_gamma(n + 1, x)
        out.append((n, lq))
        if _is_inf(N) and (-lq < threshold and n + 1 > x):
            break
        n += 1
        if n > _N_CAP:
            raise ArithmeticError("gap product did not converge")
    return out


def gap_ginibre(N: Size, s: float, threshold: float = _INF_TRUNC) -> float:
    """Gap probability at the origin for the complex Ginibre ensemble.

    Parameters
    ----------
    N : int or math.inf
        Matrix size; ``math.inf`` (or ``None``) multiplies factors until the
        next one differs from 1 by less than ``threshold``.
    s : float
        Disk radius, s >= 0.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    x = s * s
    if x == 0:
        return 1.0
    return math.exp(math.fsum(lq for _, lq in _log_q_factors(N, x, threshold)))


def gap_truncation(M: int, L: int, s: float) -> float:
    """Gap probability at the origin for an M x M corner of a Haar unitary of size M+L."""
    if not 0 <= s < 1:
        raise ValueError("s must lie in [0, 1)")
    x = s * s
    if x == 0:
        return 1.0
    logs = [math.log1p(-specfun.regularized_incomplete_beta(x, m + 1, L)) for m in range(1, M)]
    return math.exp(math.fsum(logs))


def nn_density(N: Size, s: float, threshold: float = _INF_TRUNC) -> float:
    """Nearest-neighbour spacing density p(s) = -dH/ds for the Ginibre ensemble.

    Uses dQ(n, x)/dx = -e^{-x} x^{n-1} / Gamma(n), so
    p(s) = H(s) * sum_n 2 s e^{-x} x^n / (n! Q(n+1, x)) with x = s^2.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    x = s * s
    if x == 0:
        return 0.0
    factors = _log_q_factors(N, x, threshold)
    log_h = math.fsum(lq for _, lq in factors)
    lx = math.log(x)
    terms = [math.exp(-x + n * lx - math.lgamma(n + 1) - lq) for n, lq in factors]
    return 2 * s * math.exp(log_h) * math.fsum(terms)


def nn_density_truncation(M: int, L: int, s: float) -> float:
    """-dH/ds for the truncated-unitary gap product.

    d I_x(a, b)/dx = x^{a-1} (1-x)^{b-1} / B(a, b).
    """
    if not 0 <= s < 1:
        raise ValueError("s must lie in [0, 1)")
    x = s * s
    if x == 0:
        return 0.0
    h = gap_truncation(M, L, s)
    terms = []
    for m in range(1, M):
        a, b = m + 1, L
        comp = 1 - specfun.regularized_incomplete_beta(x, a, b)
        log_dens = (a - 1) * math.log(x) + (b - 1) * math.log1p(-x) - (
            math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        )
        terms.append(math.exp(log_dens) / comp)
    return 2 * s * h * math.fsum(terms)


def gap_curve(N: Size, s_grid: Sequence[float], ensemble: EnsembleSpec | None = None) -> GapCurve:
    """Ginibre gap probability tabulated on ``s_grid``."""
    s = np.asarray(s_grid, dtype=float)
    return GapCurve(ensemble, s, np.array([gap_ginibre(N, float(v)) for v in s]))
