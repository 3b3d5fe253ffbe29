"""Samplers for the Gaussian non-Hermitian ensembles and spectrum extraction.

Five ensembles are supported: complex (circular or elliptic), real (circular
or elliptic), quaternion-real (circular or elliptic) and the top-left corner
of a Haar unitary. Real and quaternion-real spectra are split into real
eigenvalues and one upper-half-plane representative per conjugate pair.

Every sample ``i`` draws from its own generator seeded by
``SeedSequence(seed, spawn_key=(i,))``, so a stream of spectra depends only on
``(seed, spec, count)`` and not on how the work is scheduled.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "SymmetryClass",
    "Variant",
    "EnsembleSpec",
    "SamplerConfig",
    "Spectrum",
    "SpectrumError",
    "sample_rng",
    "sample_matrix",
    "haar_unitary",
    "spectrum",
    "sample_spectra",
    "write_spectra_csv",
    "quaternion_dual",
]


class SymmetryClass(str, Enum):
    COMPLEX = "complex"
    REAL = "real"
    QUATERNION = "quaternion"


class Variant(str, Enum):
    CIRCULAR = "circular"
    ELLIPTIC = "elliptic"
    TRUNCATED_UNITARY = "truncated_unitary"


@dataclass(frozen=True)
class EnsembleSpec:
    """Which ensemble a sampler or kernel refers to.

    Parameters
    ----------
    symmetry_class : SymmetryClass or str
        ``"complex"``, ``"real"`` or ``"quaternion"``.
    variant : Variant or str
        ``"circular"``, ``"elliptic"`` or ``"truncated_unitary"``.
    dim : int
        Matrix dimension N. For the quaternion class this is the size of the
        complex representation, so it must be even.
    tau : float
        Non-Hermiticity parameter of the elliptic variant. The value 1 (the
        Hermitian or symmetric limit) is accepted for sampling only.
    trunc_l : int, optional
        Number of discarded rows/columns L of the truncated unitary; the
        parent unitary has size dim + L.
    """

    symmetry_class: SymmetryClass
    variant: Variant
    dim: int
    tau: float = 0.0
    trunc_l: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "symmetry_class", SymmetryClass(self.symmetry_class))
        object.__setattr__(self, "variant", Variant(self.variant))
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))
        cls, var = self.symmetry_class, self.variant
        if cls is SymmetryClass.QUATERNION and self.dim % 2:
            raise ValueError("dim must be even")
        if var is Variant.ELLIPTIC:
            t = float(self.tau)
            if cls is SymmetryClass.COMPLEX and not 0.0 <= t <= 1.0:
                raise ValueError("tau must lie in [0, 1] for the complex elliptic ensemble")
            if cls is not SymmetryClass.COMPLEX and not -1.0 < t <= 1.0:
                raise ValueError("tau must lie in (-1, 1] for the real/quaternion elliptic ensembles")
            object.__setattr__(self, "tau", t)
        elif self.tau != 0.0:
            raise ValueError("tau is only meaningful for the elliptic variant")
        if var is Variant.TRUNCATED_UNITARY:
            if cls is not SymmetryClass.COMPLEX:
                raise ValueError("truncated_unitary requires symmetry_class='complex'")
            if self.trunc_l is None or int(self.trunc_l) != self.trunc_l or self.trunc_l < 1:
                raise ValueError("truncated_unitary requires an integer trunc_l >= 1")
            object.__setattr__(self, "trunc_l", int(self.trunc_l))
        elif self.trunc_l is not None:
            raise ValueError("trunc_l is only meaningful for truncated_unitary")

    @property
    def trunc_m(self) -> Optional[int]:
        return self.dim if self.variant is Variant.TRUNCATED_UNITARY else None


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling and classification settings.

    ``real_axis_tol=None`` selects the default 1e-8 * sqrt(N).
    """

    seed: int = 0
    worker_count: int = 1
    eig_tol: float = 1e-10
    real_axis_tol: Optional[float] = None
    chunk_size: int = 64

    def __post_init__(self):
        if self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")
        if not self.eig_tol > 0:
            raise ValueError("eig_tol must be positive")
        if self.real_axis_tol is not None and not self.real_axis_tol > 0:
            raise ValueError("real_axis_tol must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def axis_tol(self, n: int) -> float:
        return self.real_axis_tol if self.real_axis_tol is not None else 1e-8 * math.sqrt(n)


@dataclass
class Spectrum:
    """One sampled eigenvalue set.

    For the complex class every eigenvalue is stored in ``complex_eigs`` and
    the other two fields stay empty. For the real and quaternion classes
    ``len(real_eigs) + 2 * len(pair_reps) == dim``.
    """

    dim: int
    real_eigs: np.ndarray = field(default_factory=lambda: np.empty(0))
    pair_reps: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))
    complex_eigs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))

    def all_eigenvalues(self) -> np.ndarray:
        """Every eigenvalue with multiplicity (conjugates restored)."""
        if self.complex_eigs.size:
            return self.complex_eigs
        return np.concatenate(
            [self.real_eigs.astype(complex), self.pair_reps, np.conj(self.pair_reps)]
        )


class SpectrumError(RuntimeError):
    """Eigenvalue extraction or classification failed."""

    def __init__(self, message: str, sample_index: Optional[int] = None):
        if sample_index is not None:
            message = f"sample {sample_index}: {message}"
        super().__init__(message)
        self.sample_index = sample_index


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index`` of the stream ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _complex_gauss(rng, shape):
    # <|g|^2> = 1, <g^2> = 0
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _gue(rng, n):
    # Hermitian with <|H_ij|^2> = 1 for every entry
    g = _complex_gauss(rng, (n, n))
    return (g + g.conj().T) / math.sqrt(2.0)


def quaternion_dual(a: np.ndarray, b: np.ndarray):
    """Quaternion conjugate-transpose in component form.

    A quaternion matrix is stored as two complex n x n arrays (a, b) whose
    2x2 blocks are [[a, b], [-conj(b), conj(a)]]. The dagger of that complex
    matrix has components (a^H, -b^T).
    """
    return a.conj().T, -b.T


def _quaternion_embed(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.empty((2 * n, 2 * n), dtype=complex)
    out[0::2, 0::2] = a
    out[0::2, 1::2] = b
    out[1::2, 0::2] = -b.conj()
    out[1::2, 1::2] = a.conj()
    return out


def _quaternion_gauss(rng, n):
    return _complex_gauss(rng, (n, n)), _complex_gauss(rng, (n, n))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n unitary from a phase-corrected QR factorization."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    q, r = np.linalg.qr(_complex_gauss(rng, (n, n)))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_matrix(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one matrix from the ensemble described by ``spec``.

    Returns a float array for the real class and a complex array otherwise.
    """
    n, cls, var = spec.dim, spec.symmetry_class, spec.variant
    tau = spec.tau
    if var is Variant.TRUNCATED_UNITARY:
        return haar_unitary(n + spec.trunc_l, rng)[:n, :n]
    if cls is SymmetryClass.COMPLEX:
        if var is Variant.CIRCULAR:
            return _complex_gauss(rng, (n, n))
        # <|J_ij|^2> = 1 and <J_ij J_ji> = tau
        h1, h2 = _gue(rng, n), _gue(rng, n)
        return math.sqrt((1 + tau) / 2) * h1 + 1j * math.sqrt((1 - tau) / 2) * h2
    if cls is SymmetryClass.REAL:
        if var is Variant.CIRCULAR:
            return rng.standard_normal((n, n))
        u = rng.standard_normal((n, n))
        v = rng.standard_normal((n, n))
        iu = np.triu_indices(n, 1)
        j = np.zeros((n, n))
        j[iu] = u[iu]
        j.T[iu] = tau * u[iu] + math.sqrt(max(1.0 - tau * tau, 0.0)) * v[iu]
        j[np.diag_indices(n)] = math.sqrt(1.0 + tau) * np.diagonal(u)
        return j
    m = n // 2
    if var is Variant.CIRCULAR:
        return _quaternion_embed(*_quaternion_gauss(rng, m))
    # mix a self-dual and an anti-self-dual quaternion Gaussian matrix
    a1, b1 = _quaternion_gauss(rng, m)
    a2, b2 = _quaternion_gauss(rng, m)
    d1, e1 = quaternion_dual(a1, b1)
    d2, e2 = quaternion_dual(a2, b2)
    cs, ca = math.sqrt((1 + tau) / 4), math.sqrt((1 - tau) / 4)
    a = cs * (a1 + d1) + ca * (a2 - d2)
    b = cs * (b1 + e1) + ca * (b2 - e2)
    return _quaternion_embed(a, b)


def _backward_errors(j: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eig(j)
    res = np.linalg.norm(j @ vec - vec * lam, axis=0) / np.linalg.norm(vec, axis=0)
    return res / max(np.linalg.norm(j, 2), np.finfo(float).tiny)


def spectrum(
    j: np.ndarray,
    cfg: SamplerConfig = SamplerConfig(),
    symmetry_class: SymmetryClass | str = SymmetryClass.COMPLEX,
    check_backward_error: bool = False,
) -> Spectrum:
    """Eigenvalues of ``j`` classified by symmetry class.

    Parameters
    ----------
    j : ndarray
        Square matrix.
    cfg : SamplerConfig
        Supplies ``eig_tol`` and the real-axis threshold.
    symmetry_class : SymmetryClass or str
        For ``"real"`` and ``"quaternion"`` eigenvalues within the threshold
        of the real axis are snapped to it and the rest are paired with their
        conjugates.
    check_backward_error : bool
        Also compute eigenvectors and enforce the ``eig_tol`` backward-error
        contract (roughly triples the cost).
    """
    j = np.asarray(j)
    if j.ndim != 2 or j.shape[0] != j.shape[1]:
        raise SpectrumError("matrix must be square")
    n = j.shape[0]
    cls = SymmetryClass(symmetry_class)
    if check_backward_error:
        err = _backward_errors(j).max()
        if err > cfg.eig_tol:
            raise SpectrumError(f"eigensolver backward error {err:.3g} exceeds {cfg.eig_tol:.3g}")
    lam = np.linalg.eigvals(j)
    if cls is SymmetryClass.COMPLEX:
        order = np.lexsort((lam.imag, lam.real))
        return Spectrum(dim=n, complex_eigs=lam[order].astype(complex))

    tol = cfg.axis_tol(n)
    on_axis = np.abs(lam.imag) <= tol
    real_eigs = np.sort(lam.real[on_axis])
    upper = lam[lam.imag > tol]
    lower = lam[lam.imag < -tol]
    if upper.size != lower.size:
        raise SpectrumError("unpaired complex eigenvalue")
    if upper.size:
        cost = np.abs(upper[:, None] - np.conj(lower)[None, :])
        rows, cols = linear_sum_assignment(cost)
        mismatch = cost[rows, cols].max()
        scale = 1.0 + np.abs(lam).max()
        if mismatch > 1e-6 * scale:
            raise SpectrumError(f"conjugate pairing failed (mismatch {mismatch:.3g})")
        reps = 0.5 * (upper[rows] + np.conj(lower[cols]))
        reps = reps[np.lexsort((reps.imag, reps.real))]
    else:
        reps = np.empty(0, dtype=complex)
    return Spectrum(dim=n, real_eigs=real_eigs, pair_reps=reps.astype(complex))


def _one_sample(spec, cfg, index):
    try:
        return spectrum(sample_matrix(spec, sample_rng(cfg.seed, index)), cfg, spec.symmetry_class)
    except SpectrumError as exc:
        raise SpectrumError(str(exc), sample_index=index) from exc
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failure: {exc}", sample_index=index) from exc


def _chunk(spec, cfg, start, stop):
    return [_one_sample(spec, cfg, i) for i in range(start, stop)]


def sample_spectra(
    spec: EnsembleSpec, count: int, cfg: SamplerConfig = SamplerConfig(), start: int = 0
) -> Iterator[Spectrum]:
    """Yield ``count`` spectra in sample-index order.

    The output depends only on ``(cfg.seed, spec, count, start)``;
    ``cfg.worker_count`` changes the wall-clock time, never the values.
    """
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    bounds = [(s, min(s + cfg.chunk_size, start + count)) for s in range(start, start + count, cfg.chunk_size)]
    if cfg.worker_count == 1:
        for lo, hi in bounds:
            yield from _chunk(spec, cfg, lo, hi)
        return
    with ThreadPoolExecutor(max_workers=cfg.worker_count) as pool:
        # bounded look-ahead keeps memory flat for long streams
        window = 2 * cfg.worker_count
        pending = []
        it = iter(bounds)
        for lo, hi in it:
            pending.append(pool.submit(_chunk, spec, cfg, lo, hi))
            if len(pending) >= window:
                yield from pending.pop(0).result()
        for fut in pending:
            yield from fut.result()


def write_spectra_csv(spectra: Iterable[Spectrum], fh, start_index: int = 0) -> int:
    """Write spectra as rows ``sample_index, kind, re, im``; returns the row count.

    ``kind`` is ``real`` or ``pair`` for the real/quaternion classes and
    ``complex`` for the complex class. Floats use the shortest decimal that
    round-trips exactly.
    """
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["sample_index", "kind", "re", "im"])
    rows = 0
    for i, sp in enumerate(spectra, start=start_index):
        for x in sp.real_eigs:
            w.writerow([i, "real", repr(float(x)), "0.0"])
            rows += 1
        for z in sp.pair_reps:
            w.writerow([i, "pair", repr(float(z.real)), repr(float(z.imag))])
            rows += 1
        for z in sp.complex_eigs:
            w.writerow([i, "complex", repr(float(z.real)), repr(float(z.imag))])
            rows += 1
    return rows
