"""Green-function samples, fractional-moment scans, and their consistency checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arcs import ArcSet
from .banded import ComplexBandMatrix
from .disorder import sample_phases
from .dynamics import kernel_decay_table, projected_kernel_profile
from .fitting import DecayFit, decay_fit
from .models import ModelSpec, apply_diag_phases
from .spectral import ResolventFactor, resolvent_column

__all__ = [
    "green",
    "FmEstimate",
    "fractional_moment_mc",
    "fm_decay_scan",
    "second_moment_check",
    "dynloc_from_fm",
    "N_BATCHES",
]

N_BATCHES = 20


def green(m: ComplexBandMatrix, k: int, l: int, z: complex) -> complex:
    """G(k, l; z) = <e_k | (M - z)^{-1} e_l>."""
    return complex(resolvent_column(m, z, l)[k])


def _check_s(s: float):
    if not (0.0 < s < 1.0):
        raise ValueError(f"fractional power must lie strictly in (0,1), got {s}")


def _batch_stderr(samples: np.ndarray) -> float:
    """Batch-means standard error (20 batches, or singleton batches when few samples)."""
    n = samples.shape[0]
    n_batches = min(N_BATCHES, n)
    if n_batches < 2:
        return 0.0
    cut = (n // n_batches) * n_batches
    batches = samples[:cut].reshape(n_batches, -1).mean(axis=1)
    return float(batches.std(ddof=1) / np.sqrt(n_batches))


@dataclass(frozen=True)
class FmEstimate:
    """Monte Carlo estimate of E|G(k, l; z)|^s."""

    s: float
    z: complex
    k: int
    l: int
    mean: float
    stderr: float
    realizations: int

    def __post_init__(self):
        _check_s(self.s)
        if self.mean < 0:
            raise ValueError("fractional moments are nonnegative")


def _build_with_phases(spec: ModelSpec, phases: np.ndarray) -> ComplexBandMatrix:
    if spec.family == "quantum-walk":
        from .models import walk_diag_phases
        return apply_diag_phases(spec.deterministic_part(),
                                 walk_diag_phases(phases, spec.n))
    return apply_diag_phases(spec.deterministic_part(), phases)


def fractional_moment_mc(spec: ModelSpec, s: float, z: complex, k: int, l: int,
                         n_realizations: int, master_seed: int,
                         resample_sites=None, background_index: int = 0) -> FmEstimate:
    """Monte Carlo mean of |G(k,l;z)|^s with batch-means error bars.

    With ``resample_sites`` only those phases are redrawn per realization
    while the remaining phases stay frozen at the ``background_index``
    draw; this estimates the conditional double integral of the uniform
    fractional-moment bound.
    """
    _check_s(s)
    samples = np.empty(n_realizations)
    if resample_sites is not None:
        if spec.family == "cmv":
            raise ValueError("conditional resampling undefined for cumulative cmv phases")
        background = spec.phases(master_seed, background_index).phases
        sites = np.asarray(resample_sites, dtype=int)
        for i in range(n_realizations):
            fresh = sample_phases(spec.dist, master_seed, i + 1, sites.size).phases
            phases = background.copy()
            phases[sites] = fresh
            u = _build_with_phases(spec, phases)
            samples[i] = np.abs(green(u, k, l, z)) ** s
    else:
        for i in range(n_realizations):
            u = spec.build(master_seed, i)
            samples[i] = np.abs(green(u, k, l, z)) ** s
    return FmEstimate(s, complex(z), k, l, float(samples.mean()),
                      _batch_stderr(samples), n_realizations)


def fm_decay_scan(spec: ModelSpec, s: float, z: complex, distances, n_realizations: int,
                  master_seed: int, center: int | None = None, site_stride: int = 1):
    """Fit of E|G(center + d, center; z)|^s against distance d.

    One factored solve per realization yields the whole distance ladder.
    Returns the distance table plus the (C, alpha, R^2) fit; all-zero
    ladders (diagonal models off the diagonal) come back degenerate.
    """
    _check_s(s)
    distances = np.asarray(distances, dtype=int)
    if distances.size < 5:
        raise ValueError(f"need at least 5 distances, got {distances.size}")
    center = spec.dim // 2 if center is None else center
    rows = center + site_stride * distances
    if np.any(rows < 0) or np.any(rows >= spec.dim):
        raise IndexError("distance ladder leaves the volume")
    samples = np.empty((distances.size, n_realizations))
    for i in range(n_realizations):
        u = spec.build(master_seed, i)
        g = ResolventFactor(u, z).column(center)
        samples[:, i] = np.abs(g[rows]) ** s
    means = samples.mean(axis=1)
    stderr = np.array([_batch_stderr(samples[d]) for d in range(distances.size)])
    fit = decay_fit(distances, means)
    return {"distances": distances, "means": means, "stderr": stderr,
            "realizations": n_realizations, "fit": fit, "s": s, "z": complex(z)}


def _neighborhood(spec: ModelSpec, k: int, radius: int = 4) -> np.ndarray:
    """Indices m with |m - k| <= radius in the lattice max-norm."""
    labels = spec.deterministic_part().labels if spec.family != "cmv" else None
    if labels is not None and np.asarray(labels).ndim == 2:
        labels = np.asarray(labels)
        dist = np.max(np.abs(labels - labels[k][None, :]), axis=1)
        return np.nonzero(dist <= radius)[0]
    idx = np.arange(max(0, k - radius), min(spec.dim, k + radius + 1))
    return idx


def second_moment_check(spec: ModelSpec, s: float, z: complex, k: int, l: int,
                        n_realizations: int, master_seed: int):
    """Estimates of both sides of the second-moment relation and their ratio.

    LHS = E[(1-|z|^2) |G(k,l;z)|^2]; RHS = sum over the bandwidth-4
    neighborhood of k of E|G(m,l;z)|^s (the proportionality constant is
    not asserted, only ratio stability across scans).
    """
    _check_s(s)
    z = complex(z)
    if abs(z) >= 1.0:
        raise ValueError(f"second-moment relation needs |z| < 1, got {abs(z)}")
    hood = _neighborhood(spec, k)
    lhs = np.empty(n_realizations)
    rhs = np.empty(n_realizations)
    for i in range(n_realizations):
        u = spec.build(master_seed, i)
        g = ResolventFactor(u, z).column(l)
        lhs[i] = (1.0 - abs(z) ** 2) * np.abs(g[k]) ** 2
        rhs[i] = np.sum(np.abs(g[hood]) ** s)
    lhs_mean, rhs_mean = float(lhs.mean()), float(rhs.mean())
    ratio = lhs_mean / rhs_mean if rhs_mean > 0 else (0.0 if lhs_mean == 0 else np.inf)
    return {"lhs": lhs_mean, "lhs_stderr": _batch_stderr(lhs),
            "rhs": rhs_mean, "rhs_stderr": _batch_stderr(rhs),
            "ratio": ratio, "neighborhood": hood}


def dynloc_from_fm(spec: ModelSpec, arc: ArcSet, s: float, z: complex, distances,
                   n_max: int, n_realizations: int, master_seed: int,
                   slack: float = 0.05, site_stride: int = 1):
    """Consistency record: projected-kernel decay rate against the FM rate / 4.

    Not a proof; reports whether the observed kernel decay is at least the
    fractional-moment decay rate divided by four, minus slack.  When the
    FM fit is degenerate (delocalized control) the record is flagged
    not-applicable.
    """
    fm = fm_decay_scan(spec, s, z, distances, n_realizations, master_seed,
                       site_stride=site_stride)
    fm_fit: DecayFit = fm["fit"]
    if fm_fit.degenerate or fm_fit.alpha <= 0.01 or fm_fit.r_squared < 0.9:
        return {"applicable": False, "fm": fm, "kernel_fit": None, "ok": None}
    if arc.is_full_circle:
        kernel = kernel_decay_table(spec, distances, n_max, n_realizations,
                                    master_seed, site_stride=site_stride)
    else:
        center = spec.dim // 2
        profile = projected_kernel_profile(spec, arc, center, n_max,
                                           n_realizations, master_seed)
        rows = center + site_stride * np.asarray(distances, dtype=int)
        means = profile[rows, :].mean(axis=1)
        kernel = {"distances": np.asarray(distances), "means": means,
                  "fit": decay_fit(distances, means)}
    k_fit: DecayFit = kernel["fit"]
    ok = (not k_fit.degenerate) and (k_fit.alpha >= fm_fit.alpha / 4.0 - slack)
    return {"applicable": True, "fm": fm, "kernel_fit": k_fit,
            "alpha_fm": fm_fit.alpha, "alpha_kernel": k_fit.alpha, "ok": bool(ok)}
