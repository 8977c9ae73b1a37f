"""Time evolution, position moments, and kernel-decay localization diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .arcs import ArcSet
from .banded import ComplexBandMatrix
from .fitting import DecayFit, decay_fit, linear_fit
from .models import ModelSpec, build_qw
from .spectral import eig_finite, spectral_projector

__all__ = [
    "evolve",
    "position_weights",
    "position_moment",
    "MomentSeries",
    "BoundaryContamination",
    "kernel_sup_profile",
    "kernel_sup",
    "kernel_decay_table",
    "projected_kernel_sup",
    "projected_kernel_profile",
    "moment_boundedness_probe",
    "ballistic_coefficient",
]

BOUNDARY_MASS_TOL = 1e-8


class BoundaryContamination(RuntimeError):
    """Wavefront reached the finite-volume boundary during a probe."""


@dataclass(frozen=True)
class MomentSeries:
    """Position-moment time series with realization metadata."""

    times: np.ndarray
    values: np.ndarray
    p: float
    norm_kind: str
    meta: dict = field(default_factory=dict)
    arc: ArcSet | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(values < -1e-12):
            raise ValueError("moment values must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


def evolve(m: ComplexBandMatrix, psi0: np.ndarray, n: int) -> np.ndarray:
    """U^n psi0 (negative n uses the adjoint)."""
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if psi0.shape[0] != m.dim:
        raise ValueError(f"state length {psi0.shape[0]} != dim {m.dim}")
    op = m if n >= 0 else m.adjoint()
    offs, data = op.kernel_arrays()
    ones = np.ones(m.dim, dtype=np.complex128)
    return kernels.evolve_state(offs, data, ones, psi0, abs(int(n)), False)


def position_weights(labels, p: float, norm_kind: str) -> np.ndarray:
    """|label|^p per row under the chosen position norm."""
    labels = np.asarray(labels)
    if labels.ndim == 1:
        mag = np.abs(labels.astype(float))
    elif norm_kind == "euclid-d":
        mag = np.sqrt(np.sum(labels.astype(float) ** 2, axis=1))
    else:
        raise ValueError(f"vector labels need euclid-d norm, got {norm_kind!r}")
    if norm_kind not in ("1d-index", "euclid-d", "walk-position"):
        raise ValueError(f"unknown norm kind {norm_kind!r}")
    return mag ** p


def position_moment(psi: np.ndarray, labels, p: float, norm_kind: str = "1d-index") -> float:
    """Sum_k |psi_k|^2 |label(k)|^p, an exact finite sum."""
    if labels is None:
        raise ValueError("matrix rows are unlabeled")
    if p <= 0:
        raise ValueError(f"moment order must be positive, got {p}")
    w = position_weights(labels, p, norm_kind)
    return float(np.sum(w * np.abs(np.asarray(psi)) ** 2))


def _norm_kind_for(spec: ModelSpec) -> str:
    if spec.family == "anderson-d":
        return "euclid-d"
    if spec.family == "quantum-walk":
        return "walk-position"
    return "1d-index"


def _batch_phase_matrix(spec: ModelSpec, master_seed: int, indices) -> np.ndarray:
    cols = [np.exp(-1j * spec.diag_phases(master_seed, i)) for i in indices]
    return np.stack(cols, axis=1)


def _sweep_sup(spec_s: ComplexBandMatrix, phase_mat: np.ndarray, psi0: np.ndarray,
               n_max: int) -> np.ndarray:
    """sup_{|n| <= n_max} |(U^n psi0)_j| per row and realization (columns)."""
    offs, data = spec_s.kernel_arrays()
    adj = spec_s.adjoint()
    offs_a, data_a = adj.kernel_arrays()
    sup = np.zeros(psi0.shape, dtype=float)
    kernels.evolve_sup_abs(offs, data, phase_mat, psi0.copy(), n_max, False, sup)
    if n_max > 0:
        kernels.evolve_sup_abs(offs_a, data_a, np.conj(phase_mat), psi0.copy(),
                               n_max, True, sup)
    return sup


def kernel_sup_profile(spec: ModelSpec, source: int, n_max: int, n_realizations: int,
                       master_seed: int, indices=None) -> np.ndarray:
    """(dim, R) array of sup_{|n| <= n_max} |<e_j| U^n e_source>| per realization."""
    indices = range(n_realizations) if indices is None else indices
    dim = spec.dim
    if not (0 <= source < dim):
        raise IndexError(f"source index {source} outside volume of dim {dim}")
    if spec.family == "cmv":
        cols = []
        ones = np.ones(dim, dtype=np.complex128)
        for i in indices:
            u = spec.build(master_seed, i)
            psi0 = np.zeros((dim, 1), dtype=np.complex128)
            psi0[source, 0] = 1.0
            cols.append(_sweep_sup(u, ones[:, None], psi0, n_max)[:, 0])
        return np.stack(cols, axis=1)
    s = spec.deterministic_part()
    phase_mat = _batch_phase_matrix(spec, master_seed, indices)
    psi0 = np.zeros((dim, phase_mat.shape[1]), dtype=np.complex128)
    psi0[source, :] = 1.0
    return _sweep_sup(s, phase_mat, psi0, n_max)


def kernel_sup(spec: ModelSpec, j: int, k: int, n_max: int, n_realizations: int,
               master_seed: int):
    """Per-realization sup_{|n| <= n_max} |<e_j|U^n e_k>| and the empirical mean."""
    if not (0 <= j < spec.dim):
        raise IndexError(f"index {j} outside volume of dim {spec.dim}")
    profile = kernel_sup_profile(spec, k, n_max, n_realizations, master_seed)
    values = profile[j, :]
    return values, float(np.mean(values))


def kernel_decay_table(spec: ModelSpec, distances, n_max: int, n_realizations: int,
                       master_seed: int, center: int | None = None,
                       site_stride: int = 1):
    """Mean sup-kernel against distance, plus the exponential decay fit.

    ``site_stride`` maps label distances to basis-index distances (2 for the
    spin-doubled walk).  Distances below the near field are kept in the
    table but excluded from the fit.
    """
    distances = np.asarray(distances, dtype=int)
    center = spec.dim // 2 if center is None else center
    profile = kernel_sup_profile(spec, center, n_max, n_realizations, master_seed)
    rows = center + site_stride * distances
    if np.any(rows >= spec.dim) or np.any(rows < 0):
        raise IndexError("distance ladder leaves the volume")
    samples = profile[rows, :]
    means = samples.mean(axis=1)
    stderr = samples.std(axis=1, ddof=1) / np.sqrt(samples.shape[1]) if samples.shape[1] > 1 \
        else np.zeros(len(distances))
    fit = decay_fit(distances, means)
    return {"distances": distances, "means": means, "stderr": stderr,
            "realizations": samples.shape[1], "fit": fit, "samples": samples}


def projected_kernel_profile(spec: ModelSpec, arc: ArcSet, source: int, n_max: int,
                             n_realizations: int, master_seed: int) -> np.ndarray:
    """As kernel_sup_profile with the spectral projector onto ``arc`` inserted."""
    dim = spec.dim
    s = None if spec.family == "cmv" else spec.deterministic_part()
    cols = []
    for i in range(n_realizations):
        u = spec.build(master_seed, i)
        vals, vecs = eig_finite(u)
        mask = arc.contains(np.angle(vals))
        if not np.any(mask):
            cols.append(np.zeros(dim))
            continue
        v = vecs[:, mask]
        psi0 = (v @ (v.conj().T[:, source])).reshape(dim, 1)
        if s is None:
            ones = np.ones((dim, 1), dtype=np.complex128)
            cols.append(_sweep_sup(u, ones, psi0, n_max)[:, 0])
        else:
            ph = np.exp(-1j * spec.diag_phases(master_seed, i)).reshape(dim, 1)
            cols.append(_sweep_sup(s, ph, psi0, n_max)[:, 0])
    return np.stack(cols, axis=1)


def projected_kernel_sup(spec: ModelSpec, arc: ArcSet, j: int, k: int, n_max: int,
                         n_realizations: int, master_seed: int):
    profile = projected_kernel_profile(spec, arc, k, n_max, n_realizations, master_seed)
    values = profile[j, :]
    return values, float(np.mean(values))


def _boundary_rows(labels) -> np.ndarray:
    labels = np.asarray(labels)
    mag = np.abs(labels.astype(float)) if labels.ndim == 1 \
        else np.max(np.abs(labels.astype(float)), axis=1)
    return mag >= mag.max() - 2


def moment_boundedness_probe(spec: ModelSpec, p: float, n_max: int, n_realizations: int,
                             master_seed: int, source: int | None = None,
                             check_boundary: bool = True):
    """Time series of <|X|^p> from a point source, with a saturation diagnostic.

    Returns per-realization series (n_max+1, R), the running max, the
    last-quarter-to-global max ratio per realization, and the final
    boundary mass.  Raises BoundaryContamination when mass beyond the
    volume margin exceeds 1e-8.
    """
    if spec.family == "cmv":
        raise ValueError("probe needs position labels; cmv rows index coefficients")
    s = spec.deterministic_part()
    dim = spec.dim
    labels = s.labels
    norm_kind = _norm_kind_for(spec)
    weights = position_weights(labels, p, norm_kind)
    if source is None:
        mag = weights if p == 1 else position_weights(labels, 1.0, norm_kind)
        source = int(np.argmin(mag))
    phase_mat = _batch_phase_matrix(spec, master_seed, range(n_realizations))
    psi0 = np.zeros((dim, n_realizations), dtype=np.complex128)
    psi0[source, :] = 1.0
    offs, data = s.kernel_arrays()
    series = np.empty((n_max + 1, n_realizations), dtype=float)
    final = kernels.evolve_weighted_series(offs, data, phase_mat, psi0, n_max,
                                           weights, series, False)
    boundary = _boundary_rows(labels)
    boundary_mass = np.sum(np.abs(final[boundary, :]) ** 2, axis=0)
    if check_boundary and np.any(boundary_mass > BOUNDARY_MASS_TOL):
        raise BoundaryContamination(
            f"boundary mass up to {boundary_mass.max():.3e} exceeds {BOUNDARY_MASS_TOL}")
    running_max = np.maximum.accumulate(series, axis=0)
    quarter = series[3 * (n_max + 1) // 4:, :].max(axis=0)
    ratio = np.where(running_max[-1] > 0, quarter / np.maximum(running_max[-1], 1e-300), 1.0)
    return {"series": series, "running_max": running_max,
            "saturation_ratio": ratio, "boundary_mass": boundary_mass,
            "times": np.arange(n_max + 1)}


def ballistic_coefficient(coin: np.ndarray, n_max: int, margin: int = 8):
    """Slope B of <X^2>(n) against n^2 for the translation-invariant walk.

    The walk runs from spin-up at the origin on a ring large enough that
    the wavefront never wraps; B is the least-squares slope over the last
    half of the window.
    """
    if n_max < 100:
        raise ValueError(f"n_max must be >= 100, got {n_max}")
    n_sites = 2 * (n_max + margin)
    coins = np.tile(np.asarray(coin, dtype=np.complex128), (n_sites, 1, 1))
    u = build_qw(coins)
    offs, data = u.kernel_arrays()
    dim = u.dim
    psi0 = np.zeros((dim, 1), dtype=np.complex128)
    origin = 2 * (n_sites // 2)  # spin-up component of the centered site
    psi0[origin, 0] = 1.0
    weights = position_weights(u.labels, 2.0, "walk-position")
    series = np.empty((n_max + 1, 1), dtype=float)
    ones = np.ones((dim, 1), dtype=np.complex128)
    kernels.evolve_weighted_series(offs, data, ones, psi0, n_max, weights, series, False)
    values = series[:, 0]
    times = np.arange(n_max + 1)
    half = times >= n_max // 2
    fit = linear_fit(times[half].astype(float) ** 2, values[half])
    b = max(fit.slope, -1e-9)
    return {"B": b, "fit": fit, "times": times, "values": values}
