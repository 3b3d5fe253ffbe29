"""Exact finite-N eigenvalue statistics of non-Hermitian Gaussian ensembles.

Covers the complex, real and quaternion-real Ginibre ensembles, their
elliptic deformations and truncations of Haar unitaries, together with a
Monte Carlo harness that checks every formula against sampled spectra.
"""

__version__ = "0.1.0"

from . import specfun, ensembles, det_kernels, pfaff_kernels, gap_stats, mc_verify  # noqa: F401
