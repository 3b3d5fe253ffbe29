"""Command-line front end: ``ginlab sample | exact | verify``.

Exit codes: 0 success or statistical pass, 1 statistical failure (including
too few samples for an estimator), 2 invalid configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from . import __version__
from . import det_kernels as dk
from . import gap_stats as gs
from . import mc_verify as mv
from . import pfaff_kernels as pk
from .ensembles import EnsembleSpec, SamplerConfig, SymmetryClass, Variant, sample_spectra, write_spectra_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

CURVES = ("density", "real_density", "edge", "gap", "nn", "weak_density", "kernel_slice")
SUITES = ("density", "real_count", "pair", "gap", "all")

_DEFAULTS = {
    "class": "complex",
    "variant": "circular",
    "dim": "64",
    "tau": 0.0,
    "trunc_m": None,
    "trunc_l": None,
    "seed": None,
    "samples": 1000,
    "workers": 1,
    "out": None,
    "format": "csv",
    "x_min": 0.0,
    "x_max": 3.0,
    "step": 0.01,
    "y": 0.0,
    "a": 1.0,
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one CLI run."""

    symmetry_class: str
    variant: str
    dim: float  # math.inf allowed for exact gap/nn/edge curves
    tau: float
    trunc_l: Optional[int]
    seed: int
    samples: int
    workers: int
    out: Optional[str]
    format: str
    x_min: float
    x_max: float
    step: float
    y: float
    a: float

    def __post_init__(self):
        if self.samples < 1:
            raise UsageError("samples must be at least 1")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if not self.step > 0:
            raise UsageError("step must be positive")
        if self.x_max < self.x_min:
            raise UsageError("grid upper bound below lower bound")

    @property
    def finite_dim(self) -> bool:
        return not math.isinf(self.dim)

    def ensemble(self) -> EnsembleSpec:
        if not self.finite_dim:
            raise UsageError("dim must be finite for this command")
        return EnsembleSpec(self.symmetry_class, self.variant, int(self.dim), self.tau, self.trunc_l)

    def digest(self) -> str:
        d = asdict(self)
        d.pop("out")
        d["dim"] = "inf" if math.isinf(self.dim) else int(self.dim)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def header(self) -> dict:
        return {"ginlab_version": __version__, "seed": self.seed, "config_hash": self.digest()}

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.x_max - self.x_min) / self.step + 1e-9)) + 1
        return self.x_min + self.step * np.arange(n)


def _parse_dim(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise UsageError(f"invalid dim {v!r}") from None
    if f != int(f) or f < 1:
        raise UsageError("dim must be a positive integer or 'inf'")
    return float(int(f))


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--class", dest="class", choices=[c.value for c in SymmetryClass], default=S)
    common.add_argument("--variant", choices=[v.value for v in Variant], default=S)
    common.add_argument("--dim", default=S, help="matrix size N (or 'inf' for limit curves)")
    common.add_argument("--tau", type=float, default=S)
    common.add_argument("--trunc-m", dest="trunc_m", type=int, default=S, help="size M of the truncated corner (sets --dim)")
    common.add_argument("--trunc-l", dest="trunc_l", type=int, default=S)
    common.add_argument("--seed", type=int, default=S, help="defaults to $GINLAB_SEED, then 0")
    common.add_argument("--samples", type=int, default=S)
    common.add_argument("--workers", type=int, default=S)
    common.add_argument("--out", default=S, help="output file (default: standard output)")
    common.add_argument("--format", choices=["csv", "json"], default=S)
    common.add_argument("--config", default=S, help="JSON file with the same field names; flags take precedence")

    p = argparse.ArgumentParser(prog="ginlab", description="Non-Hermitian Gaussian random matrix statistics")
    p.add_argument("--version", action="version", version=f"ginlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("sample", parents=[common], help="sample spectra and write them as CSV")

    ex = sub.add_parser("exact", parents=[common], help="tabulate an exact curve")
    ex.add_argument("curve", choices=CURVES)
    ex.add_argument("--x-min", dest="x_min", type=float, default=S)
    ex.add_argument("--x-max", "--s-max", dest="x_max", type=float, default=S)
    ex.add_argument("--step", type=float, default=S)
    ex.add_argument("--y", type=float, default=S, help="imaginary part for density/kernel_slice points")
    ex.add_argument("--a", type=float, default=S, help="weak non-Hermiticity parameter")

    ve = sub.add_parser("verify", parents=[common], help="Monte Carlo check against exact formulas")
    ve.add_argument("suite", choices=SUITES)
    return p


def _resolve(ns: argparse.Namespace) -> RunConfig:
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "curve", "suite")}
    merged = dict(_DEFAULTS)
    if "config" in given:
        path = given.pop("config")
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid JSON config: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        merged.update(file_cfg)
    merged.update(given)
    if merged.get("trunc_m") is not None:
        merged["dim"] = merged["trunc_m"]
    seed = merged["seed"]
    if seed is None:
        env = os.environ.get("GINLAB_SEED")
        try:
            seed = int(env) if env not in (None, "") else 0
        except ValueError:
            raise UsageError("GINLAB_SEED must be an integer") from None
    if int(seed) < 0:
        raise UsageError("seed must be nonnegative")
    try:
        return RunConfig(
            symmetry_class=str(merged["class"]),
            variant=str(merged["variant"]),
            dim=_parse_dim(merged["dim"]),
            tau=float(merged["tau"]),
            trunc_l=None if merged["trunc_l"] is None else int(merged["trunc_l"]),
            seed=int(seed),
            samples=int(merged["samples"]),
            workers=int(merged["workers"]),
            out=merged["out"],
            format=str(merged["format"]),
            x_min=float(merged["x_min"]),
            x_max=float(merged["x_max"]),
            step=float(merged["step"]),
            y=float(merged["y"]),
            a=float(merged["a"]),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _header_lines(cfg: RunConfig, kind: str) -> str:
    h = cfg.header()
    return f"# ginlab {h['ginlab_version']} {kind} seed={h['seed']} config_hash={h['config_hash']}\n"


def _fmt(v) -> str:
    return repr(float(v))


# ---------------------------------------------------------------- sample


def cmd_sample(cfg: RunConfig) -> int:
    spec = cfg.ensemble()
    scfg = SamplerConfig(seed=cfg.seed, worker_count=cfg.workers)
    real_counts, radii = [], []

    def tracked():
        for sp in sample_spectra(spec, cfg.samples, scfg):
            real_counts.append(len(sp.real_eigs))
            radii.append(float(np.max(np.abs(sp.all_eigenvalues()))))
            yield sp

    with _open_out(cfg.out) as fh:
        if cfg.format == "csv":
            fh.write(_header_lines(cfg, "sample"))
            rows = write_spectra_csv(tracked(), fh)
        else:
            recs = []
            for i, sp in enumerate(tracked()):
                recs.append({
                    "sample_index": i,
                    "real": [float(x) for x in sp.real_eigs],
                    "pairs": [[float(z.real), float(z.imag)] for z in sp.pair_reps],
                    "complex": [[float(z.real), float(z.imag)] for z in sp.complex_eigs],
                })
            rows = sum(len(r["real"]) + len(r["pairs"]) + len(r["complex"]) for r in recs)
            json.dump({"header": cfg.header(), "spectra": recs}, fh)
            fh.write("\n")
    summary = (
        f"samples={cfg.samples} rows={rows} mean_real_count={np.mean(real_counts):.6g} "
        f"mean_spectral_radius={np.mean(radii):.6g}"
    )
    print(summary, file=sys.stderr if cfg.out in (None, "-") else sys.stdout)
    return EXIT_OK


# ----------------------------------------------------------------- exact


def _curve_fn(cfg: RunConfig, curve: str) -> tuple[list[str], Callable[[float], tuple]]:
    cls, var = cfg.symmetry_class, cfg.variant
    complex_circ = cls == "complex" and var == "circular"
    trunc = var == "truncated_unitary"

    if curve in ("gap", "nn"):
        if complex_circ:
            N = cfg.dim if cfg.finite_dim else math.inf
            N = int(N) if cfg.finite_dim else N
            fn = gs.gap_ginibre if curve == "gap" else gs.nn_density
            return ["s", "H" if curve == "gap" else "p"], lambda s: (fn(N, s),)
        if trunc:
            spec = cfg.ensemble()
            if cfg.x_max >= 1:
                raise UsageError("truncated-unitary gap curves need s < 1")
            fn = gs.gap_truncation if curve == "gap" else gs.nn_density_truncation
            return ["s", "H" if curve == "gap" else "p"], lambda s: (fn(spec.dim, spec.trunc_l, s),)
        raise UsageError(f"curve {curve} needs the complex circular or truncated_unitary ensemble")

    if curve == "edge":
        if complex_circ:
            if not cfg.finite_dim:
                return ["x", "density"], lambda x: (dk.ginibre_edge_profile(x),)
            k = dk.DetKernel.ginibre(int(cfg.dim))
            r0 = math.sqrt(cfg.dim)
            return ["x", "density"], lambda x: (dk.density(k, r0 + x),)
        if trunc:
            spec = cfg.ensemble()
            return ["x", "profile"], lambda x: (dk.truncation_edge_profile(spec.dim, spec.trunc_l, x),)
        raise UsageError("edge curves need the complex circular or truncated_unitary ensemble")

    if curve == "weak_density":
        if var != "elliptic":
            raise UsageError("weak_density needs --variant elliptic")
        if not cfg.a > 0:
            raise UsageError("a must be positive")
        if cls == "complex":
            ctx = dk.WeakLimitContext(cfg.a, 0.0, int(cfg.dim) if cfg.finite_dim else 1)
            return ["y", "density"], lambda y: (dk.weak_density(ctx, complex(0.0, y)),)
        return ["y", "density"], lambda y: (pk.weak_density_profile(cls, y, cfg.a),)

    spec = cfg.ensemble()
    if curve == "density":
        if cls == "complex":
            k = _det_kernel(spec)
            return ["x", "density"], lambda x: (dk.density(k, complex(x, cfg.y)),)
        k = _pfaff_kernel(spec)
        if cfg.y == 0:
            # on the real axis only real eigenvalues carry density
            return ["x", "density"], lambda x: (pk.density_real(k, x),)
        return ["x", "density"], lambda x: (pk.density_complex(k, complex(x, abs(cfg.y))),)

    if curve == "real_density":
        if cls != "real":
            raise UsageError("real_density needs --class real")
        k = _pfaff_kernel(spec)
        return ["x", "density"], lambda x: (pk.density_real(k, x),)

    if curve == "kernel_slice":
        z2 = complex(0.0, cfg.y)
        if cls == "complex":
            k = _det_kernel(spec)
            f = lambda x: complex(dk.kernel(k, complex(x, cfg.y), z2))  # noqa: E731
        else:
            k = _pfaff_kernel(spec)
            f = lambda x: complex(pk.kernel_folded(k, complex(x, cfg.y), z2))  # noqa: E731
        return ["x", "re", "im"], lambda x: (f(x).real, f(x).imag)
    raise UsageError(f"unknown curve {curve}")


def _det_kernel(spec: EnsembleSpec) -> dk.DetKernel:
    return dk.DetKernel(spec)


def _pfaff_kernel(spec: EnsembleSpec) -> pk.PfaffKernel:
    if spec.variant is Variant.TRUNCATED_UNITARY:
        raise UsageError("truncated_unitary is a complex-class ensemble")
    if spec.dim % 2:
        raise UsageError("dim must be even for Pfaffian kernels")
    return pk.PfaffKernel(spec.symmetry_class, spec.dim, spec.tau)


def cmd_exact(cfg: RunConfig, curve: str) -> int:
    cols, fn = _curve_fn(cfg, curve)
    rows = [(float(x),) + tuple(float(v) for v in fn(float(x))) for x in cfg.grid()]
    with _open_out(cfg.out) as fh:
        if cfg.format == "csv":
            fh.write(_header_lines(cfg, f"exact {curve}"))
            fh.write(",".join(cols) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) for v in r) + "\n")
        else:
            json.dump({"header": cfg.header(), "curve": curve, "columns": cols, "rows": rows}, fh)
            fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _spectra(cfg: RunConfig, spec: EnsembleSpec):
    return sample_spectra(spec, cfg.samples, SamplerConfig(seed=cfg.seed, worker_count=cfg.workers))


def verify_density(cfg: RunConfig) -> list[mv.VerificationReport]:
    spec = cfg.ensemble()
    n = spec.dim
    cls, var = spec.symmetry_class, spec.variant
    reports = []
    if cls is SymmetryClass.COMPLEX and var is not Variant.ELLIPTIC:
        if var is Variant.TRUNCATED_UNITARY:
            edges = np.linspace(0, 1, 41)
            k = dk.DetKernel(spec)
        else:
            edges = np.arange(0, math.sqrt(n) + 2.0 + 1e-9, 0.25)
            k = dk.DetKernel.ginibre(n)
        prof = mv.estimate_density(_spectra(cfg, spec), edges)
        exact = mv.radial_bin_average(lambda r: dk.density(k, r), edges)
        se = mv.robust_stderr(prof.stderr, exact, prof.areas, prof.samples)
        reports.append(mv.compare(exact, prof.density, se, statistic="radial_density",
                                  grid=list(prof.centers), samples=prof.samples, seed=cfg.seed,
                                  null_stderr=mv.poisson_stderr(exact, prof.areas, prof.samples)))
        return reports
    # rectangular grid over the support, one half plane for conjugate-symmetric classes
    hx = math.sqrt(n) * (1 + abs(spec.tau)) + 1.0
    hy = math.sqrt(n) * (1 - spec.tau) + 1.0 if var is Variant.ELLIPTIC else math.sqrt(n) + 1.0
    step = max(hx, hy) / 8
    xe = np.arange(-hx, hx + 1e-9, step)
    upper = cls is not SymmetryClass.COMPLEX
    ye = np.arange(0 if upper else -hy, hy + 1e-9, step)
    spectra = list(_spectra(cfg, spec))
    hist = mv.estimate_density(spectra, (xe, ye), upper_half=upper)
    if cls is SymmetryClass.COMPLEX:
        k = dk.DetKernel(spec)
        dens = lambda z: dk.density(k, z)  # noqa: E731
    else:
        k = _pfaff_kernel(spec)
        dens = lambda z: pk.density_complex(k, z)  # noqa: E731
    exact = _cell_averages(dens, xe, ye)
    se = mv.robust_stderr(hist.stderr, exact, hist.areas, hist.samples)
    reports.append(mv.compare(exact.ravel(), hist.density.ravel(), se.ravel(), statistic="density_2d",
                              grid=[(float(x), float(y)) for x in 0.5 * (xe[1:] + xe[:-1]) for y in 0.5 * (ye[1:] + ye[:-1])],
                              samples=hist.samples, seed=cfg.seed,
                              null_stderr=mv.poisson_stderr(exact, hist.areas, hist.samples).ravel()))
    if cls is SymmetryClass.REAL:
        re = np.linspace(-hx, hx, 25)
        prof = mv.estimate_real_density(spectra, re)
        exact_r = _line_bin_average(lambda x: pk.density_real(k, x), re)
        w = np.diff(re)
        se = mv.robust_stderr(prof.stderr, exact_r, w, prof.samples)
        reports.append(mv.compare(exact_r, prof.density, se, statistic="real_density",
                                  grid=list(prof.centers), samples=prof.samples, seed=cfg.seed,
                                  null_stderr=mv.poisson_stderr(exact_r, w, prof.samples)))
    return reports


def _line_bin_average(dens, edges, order: int = 8) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(order)
    out = np.empty(edges.size - 1)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        out[i] = 0.5 * np.dot(w, [dens(float(t)) for t in 0.5 * (b - a) * x + 0.5 * (a + b)])
    return out


def _cell_averages(dens, xe, ye, order: int = 4) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(order)
    out = np.empty((xe.size - 1, ye.size - 1))
    for i, (x0, x1) in enumerate(zip(xe[:-1], xe[1:])):
        xs = 0.5 * (x1 - x0) * x + 0.5 * (x0 + x1)
        for j, (y0, y1) in enumerate(zip(ye[:-1], ye[1:])):
            ys = 0.5 * (y1 - y0) * x + 0.5 * (y0 + y1)
            vals = np.array([[dens(complex(a, b)) for b in ys] for a in xs])
            out[i, j] = 0.25 * w @ vals @ w
    return out


def verify_real_count(cfg: RunConfig) -> list[mv.VerificationReport]:
    spec = cfg.ensemble()
    if spec.symmetry_class is not SymmetryClass.REAL:
        raise UsageError("real_count needs --class real")
    mean, se = mv.estimate_real_count(_spectra(cfg, spec))
    if spec.variant is Variant.CIRCULAR:
        exact = pk.expected_real_count(spec.dim)
    else:
        k = _pfaff_kernel(spec)
        span = math.sqrt(spec.dim) * (1 + abs(spec.tau)) + 8.0
        edges = np.linspace(-span, span, 9)
        exact = float(np.sum(_line_bin_average(lambda x: pk.density_real(k, x), edges, order=12) * np.diff(edges)))
    rep = mv.compare([exact], [mean], [se], z_threshold=3.0, statistic="real_count",
                     grid=[spec.dim], samples=cfg.samples, seed=cfg.seed)
    return [rep]


def verify_pair(cfg: RunConfig) -> list[mv.VerificationReport]:
    spec = cfg.ensemble()
    if spec.symmetry_class is not SymmetryClass.COMPLEX or spec.variant is not Variant.CIRCULAR:
        raise UsageError("pair needs the complex circular ensemble")
    edges = np.linspace(0.2, 2.0, 19)
    est = mv.estimate_pair_correlation(_spectra(cfg, spec), 0.0, edges, min_samples=mv.MIN_PAIR_SAMPLES)
    exact = mv.pair_ratio_bin_average(edges)
    return [mv.compare(exact, est.ratio, est.stderr, statistic="pair_ratio",
                       grid=list(0.5 * (edges[1:] + edges[:-1])), samples=est.samples, seed=cfg.seed)]


def verify_gap(cfg: RunConfig) -> list[mv.VerificationReport]:
    spec = cfg.ensemble()
    if spec.symmetry_class is not SymmetryClass.COMPLEX or spec.variant is not Variant.CIRCULAR:
        raise UsageError("gap needs the complex circular ensemble")
    s = np.round(np.arange(0.1, 2.0 + 1e-9, 0.1), 10)
    est = mv.estimate_gap(_spectra(cfg, spec), s)
    exact = [gs.gap_ginibre(spec.dim, float(v)) for v in s]
    rep = mv.compare(exact, est.H, est.stderr, statistic="gap", grid=list(s), samples=est.samples, seed=cfg.seed,
                     null_stderr=mv.binomial_stderr(exact, est.events))
    rep.extra["events"] = est.events
    return [rep]


_SUITE_FNS = {"density": verify_density, "real_count": verify_real_count, "pair": verify_pair, "gap": verify_gap}


def _applicable(cfg: RunConfig) -> list[str]:
    cls, var = cfg.symmetry_class, cfg.variant
    names = ["density"]
    if cls == "real":
        names.append("real_count")
    if cls == "complex" and var == "circular":
        names += ["pair", "gap"]
    return names


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    names = _applicable(cfg) if suite == "all" else [suite]
    reports, failures = [], []
    for name in names:
        try:
            reports.extend(_SUITE_FNS[name](cfg))
        except mv.InsufficientSamplesError as exc:
            failures.append({"suite": name, "error": str(exc)})
    passed = not failures and all(r.passed for r in reports)
    doc = {"header": cfg.header(), "pass": passed, "reports": [r.to_dict() for r in reports]}
    if failures:
        doc["errors"] = failures
    with _open_out(cfg.out) as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    for f in failures:
        print(f"ginlab: {f['suite']}: {f['error']}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = _resolve(ns)
        if ns.command == "sample":
            return cmd_sample(cfg)
        if ns.command == "exact":
            return cmd_exact(cfg, ns.curve)
        return cmd_verify(cfg, ns.suite)
    except (UsageError, ValueError) as exc:
        print(f"ginlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ginlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
