"""Transfer-matrix formalism for generalized eigenvectors and Lyapunov exponents.

The 2x2 recursions are obtained by eliminating variables in the
five-diagonal rows of (U - z) psi = 0.  For the one-dimensional band model
the step map advances one 2-site cell,

    (psi_{2k+1}, psi_{2k+2}) = T_k(z) (psi_{2k-1}, psi_{2k}),

with T_k = P_k / (-t^2 z e^{i theta_{2k+1}}) and

    P_k = [[t^2,                       r t (1 - z e^{i theta_{2k}})],
           [r t (1 - z e^{i theta_{2k+1}}),
            z^2 e^{i(theta_{2k}+theta_{2k+1})} - r^2 z (e^{i theta_{2k}} + e^{i theta_{2k+1}}) + r^2]].

For the coined walk the rows give a one-site step on (psi_{2j}, psi_{2j+1}).
Both maps have |det T| = 1, so the top Lyapunov exponent is nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .disorder import sample_phases
from .models import ModelSpec, walk_diag_phases

__all__ = [
    "TransferStep",
    "LyapunovEstimate",
    "band1d_transfer_array",
    "walk_transfer_array",
    "transfer_array",
    "transfer_matrices",
    "propagate",
    "lyapunov",
    "gamma_scan",
    "RENORM_EVERY",
    "PIVOT_TOL",
]

RENORM_EVERY = 16
PIVOT_TOL = 1e-13


@dataclass(frozen=True)
class TransferStep:
    """One 2x2 step of the generalized-eigenvector recursion."""

    matrix: np.ndarray
    site: int
    z: complex


@dataclass(frozen=True)
class LyapunovEstimate:
    z: complex
    gamma: float
    stderr: float
    n_steps: int
    realizations: int


def _check_params(t: float, z: complex):
    if t <= 0.0 or t >= 1.0:
        raise ValueError(f"transfer recursion degenerate at t = {t}")
    if z == 0:
        raise ValueError("z = 0 is an exceptional point of every row")


def band1d_transfer_array(thetas: np.ndarray, t: float, z: complex) -> np.ndarray:
    """(n_cells, 2, 2) transfer matrices for the band model; cell k consumes
    phases (theta_{2k}, theta_{2k+1}) and advances two sites."""
    z = complex(z)
    _check_params(t, z)
    thetas = np.asarray(thetas, dtype=float)
    n_cells = thetas.shape[0] // 2
    e_even = np.exp(1j * thetas[0:2 * n_cells:2])
    e_odd = np.exp(1j * thetas[1:2 * n_cells:2])
    r = np.sqrt(1.0 - t * t)
    pivot = np.abs(-t * t * z * e_odd)
    if np.any(pivot < PIVOT_TOL):
        row = int(np.argmax(pivot < PIVOT_TOL))
        raise ValueError(f"exceptional spectral parameter at row {2 * row + 1}: pivot {pivot[row]:.2e}")
    out = np.empty((n_cells, 2, 2), dtype=np.complex128)
    out[:, 0, 0] = t * t
    out[:, 0, 1] = r * t * (1.0 - z * e_even)
    out[:, 1, 0] = r * t * (1.0 - z * e_odd)
    out[:, 1, 1] = z * z * e_even * e_odd - r * r * z * (e_even + e_odd) + r * r
    out /= (-t * t * z * e_odd)[:, None, None]
    return out


def walk_transfer_array(row_phases: np.ndarray, t: float, z: complex) -> np.ndarray:
    """(n_steps, 2, 2) transfer matrices for the coined walk; step j maps
    (psi_{2j}, psi_{2j+1}) -> (psi_{2j+2}, psi_{2j+3}), one position site."""
    z = complex(z)
    _check_params(t, z)
    row_phases = np.asarray(row_phases, dtype=float)
    n = (row_phases.shape[0] - 3) // 2
    th_odd = row_phases[1:1 + 2 * n:2]     # theta_{2j+1}
    th_even = row_phases[2:2 + 2 * n:2]    # theta_{2j+2}
    e_m = np.exp(-1j * th_even)
    r = np.sqrt(1.0 - t * t)
    out = np.empty((n, 2, 2), dtype=np.complex128)
    out[:, 0, 0] = t * e_m / z
    out[:, 0, 1] = -r * e_m / z
    out[:, 1, 0] = -(r / z) * e_m
    out[:, 1, 1] = z * np.exp(1j * th_odd) / t + (r * r / (t * z)) * e_m
    return out


def transfer_array(spec: ModelSpec, z: complex, master_seed: int,
                   realization_index: int, n_steps: int | None = None):
    """Transfer matrices for one realization; returns (array, sites_per_step)."""
    if spec.family in ("band-1d", "magnetic-ring-halfline", "anderson-d"):
        if spec.family == "anderson-d" and spec.d != 1:
            raise ValueError("transfer formalism is one-dimensional")
        n_cells = spec.n // 2 if n_steps is None else n_steps
        phases = sample_phases(spec.dist, master_seed, realization_index,
                               2 * n_cells).phases
        return band1d_transfer_array(phases, spec.t, z), 2
    if spec.family == "quantum-walk":
        n = spec.n if n_steps is None else n_steps
        raw = sample_phases(spec.dist, master_seed, realization_index,
                            2 * (n + 2)).phases
        rows = walk_diag_phases(raw, n + 2)
        return walk_transfer_array(rows[:2 * n + 3], spec.t, z), 1
    raise ValueError(f"no transfer formalism for family {spec.family!r}")


def transfer_matrices(spec: ModelSpec, z: complex, master_seed: int,
                      realization_index: int, n_steps: int | None = None):
    """The recursion as a TransferStep sequence (spec-facing wrapper)."""
    arr, stride = transfer_array(spec, z, master_seed, realization_index, n_steps)
    return [TransferStep(arr[k], k * stride, complex(z)) for k in range(arr.shape[0])]


def propagate(tmats: np.ndarray, seed: np.ndarray) -> np.ndarray:
    """All intermediate 2-vectors from applying the steps to the seed."""
    out = np.empty((tmats.shape[0] + 1, 2), dtype=np.complex128)
    out[0] = seed
    for k in range(tmats.shape[0]):
        out[k + 1] = tmats[k] @ out[k]
    return out


def lyapunov(spec: ModelSpec, z: complex, n_steps: int, n_realizations: int,
             master_seed: int, chunk: int = 256) -> LyapunovEstimate:
    """gamma(z) = mean growth rate per basis-site of the transfer products.

    Renormalizes every RENORM_EVERY steps (max-norm); the standard error
    pools the per-chunk growth rates across realizations and chunks, which
    keeps it meaningful for deterministic phase configurations too.
    """
    n_chunks = max(1, n_steps // chunk)
    v = np.zeros((n_realizations, 2), dtype=np.complex128)
    v[:, 0] = 1.0
    chunk_logs = np.zeros((n_realizations, n_chunks))
    stride = None
    for c in range(n_chunks):
        logs = np.zeros(n_realizations)
        block = np.empty((n_realizations, chunk, 2, 2), dtype=np.complex128)
        for i in range(n_realizations):
            arr, stride = transfer_array(spec, z, master_seed,
                                         i * n_chunks + c + 1, n_steps=chunk)
            block[i] = arr[:chunk]
        pre = np.log(np.linalg.norm(v, axis=1))
        kernels.transfer_product_lognorm(block, v, RENORM_EVERY, logs)
        post = np.log(np.linalg.norm(v, axis=1))
        chunk_logs[:, c] = logs + post - pre
        # keep v bounded between chunks
        scale = np.linalg.norm(v, axis=1)
        v /= scale[:, None]
    per_site = chunk_logs / (chunk * stride)
    gamma = float(per_site.mean())
    flat = per_site.reshape(-1)
    stderr = float(flat.std(ddof=1) / np.sqrt(flat.size)) if flat.size > 1 else 0.0
    return LyapunovEstimate(complex(z), gamma, stderr, n_chunks * chunk, n_realizations)


def gamma_scan(spec: ModelSpec, z_values, n_steps: int, n_realizations: int,
               master_seed: int) -> list[LyapunovEstimate]:
    """Lyapunov table over a grid of spectral parameters."""
    return [lyapunov(spec, z, n_steps, n_realizations, master_seed) for z in z_values]
