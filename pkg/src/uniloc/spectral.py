"""Resolvents, finite eigendecompositions, spectral projectors, functional calculus."""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .arcs import ArcSet
from .banded import DENSE_EIG_LIMIT, ComplexBandMatrix

__all__ = [
    "resolvent_column",
    "eig_finite",
    "spectral_projector",
    "poisson_fc",
    "poisson_grid_size",
]

_CIRCLE_TOL = 1e-15


def _check_off_circle(z: complex) -> complex:
    z = complex(z)
    if abs(abs(z) - 1.0) <= _CIRCLE_TOL:
        raise ValueError(f"spectral parameter on the unit circle rejected: |z| = {abs(z)!r}")
    return z


def resolvent_column(m: ComplexBandMatrix, z: complex, l: int, tol: float = 1e-10) -> np.ndarray:
    """Column l of (M - z)^{-1}, i.e. g with (M - z) g = e_l.

    Uses a sparse LU of the shifted band matrix; wrap diagonals are handled
    by the sparse factorization.  Rejects |z| = 1 where the resolvent may
    not exist.
    """
    z = _check_off_circle(z)
    if not (0 <= l < m.dim):
        raise IndexError(f"column index {l} out of range for dim {m.dim}")
    shifted = (m.to_csr() - z * sp.identity(m.dim, format="csr")).tocsc()
    try:
        lu = spla.splu(shifted)
    except RuntimeError as exc:  # cannot happen for unitary M with |z| != 1
        raise RuntimeError(f"singular shifted factorization at z={z}: {exc}") from None
    e = np.zeros(m.dim, dtype=np.complex128)
    e[l] = 1.0
    g = lu.solve(e)
    resid = np.linalg.norm(m.matvec(g) - z * g - e)
    if resid > tol:
        raise RuntimeError(f"resolvent solve residual {resid:.3e} exceeds {tol:.1e}")
    return g


class ResolventFactor:
    """Reusable LU of (M - z) for solving many columns at one z."""

    def __init__(self, m: ComplexBandMatrix, z: complex):
        self.z = _check_off_circle(z)
        self.dim = m.dim
        shifted = (m.to_csr() - self.z * sp.identity(m.dim, format="csr")).tocsc()
        self._lu = spla.splu(shifted)

    def column(self, l: int) -> np.ndarray:
        e = np.zeros(self.dim, dtype=np.complex128)
        e[l] = 1.0
        return self._lu.solve(e)


def eig_finite(m: ComplexBandMatrix, dense_limit: int = DENSE_EIG_LIMIT):
    """Eigenvalues (on the circle) and orthonormal eigenvectors of a unitary matrix.

    Goes through the complex Schur form, which for a (numerically) normal
    matrix is diagonal and whose basis is exactly orthonormal.
    """
    if m.dim > dense_limit:
        raise ValueError(f"dim {m.dim} above dense-eig limit {dense_limit}")
    t, q = scipy.linalg.schur(m.to_dense(), output="complex")
    return np.diag(t).copy(), q


def spectral_projector(m: ComplexBandMatrix, arc, eig=None, dense_limit: int = DENSE_EIG_LIMIT) -> np.ndarray:
    """Projector onto the eigenspaces with eigenvalue argument in the given arc.

    ``arc`` is an ArcSet or an (a, b) pair interpreted as the positively
    oriented closed arc from e^{ia} to e^{ib}.  An arc containing no
    eigenvalue yields the zero matrix.
    """
    if not isinstance(arc, ArcSet):
        a, b = arc
        arc = ArcSet.interval(a, b)
    vals, vecs = eig if eig is not None else eig_finite(m, dense_limit)
    mask = arc.contains(np.angle(vals))
    if not np.any(mask):
        return np.zeros((m.dim, m.dim), dtype=np.complex128)
    v = vecs[:, mask]
    return v @ v.conj().T


def poisson_grid_size(r: float) -> int:
    """Minimum angular grid for the Poisson smoothing at radius r (64/(1-r) rule)."""
    return int(np.ceil(64.0 / (1.0 - r)))


def poisson_fc(m: ComplexBandMatrix, f_samples: np.ndarray, r: float,
               dense_limit: int = DENSE_EIG_LIMIT) -> np.ndarray:
    """Approximate f(M) by the Poisson-smoothed resolvent average at radius r < 1.

    ``f_samples`` holds f(e^{i theta_j}) on the uniform grid
    theta_j = 2 pi j / n.  The returned matrix is the trapezoidal
    discretization of

        (1 - r^2)/(2 pi) * integral (M - r e^{i t})^{-1} (M^{-1} - r e^{-i t})^{-1} f(e^{i t}) dt,

    evaluated in the eigenbasis of M, where the resolvent product is
    diagonal with entries 1/|e^{i a} - r e^{i t}|^2.  Converges entrywise
    to f(M) as r -> 1 with the grid refined.
    """
    if not (0.0 < r < 1.0):
        raise ValueError(f"radius must lie in (0,1), got {r}")
    f_samples = np.asarray(f_samples, dtype=np.complex128)
    n = f_samples.shape[0]
    if n < poisson_grid_size(r):
        raise ValueError(
            f"grid of {n} points too coarse for r={r}; need >= {poisson_grid_size(r)}")
    vals, vecs = eig_finite(m, dense_limit)
    alphas = np.angle(vals)
    g = np.zeros(m.dim, dtype=np.complex128)
    # Poisson kernel (1-r^2)/|e^{ia} - r e^{it}|^2, trapezoid weight 2pi/n,
    # accumulated over grid chunks to bound memory.
    chunk = max(1, min(n, (1 << 22) // max(m.dim, 1)))
    for start in range(0, n, chunk):
        thetas = 2.0 * np.pi * np.arange(start, min(start + chunk, n)) / n
        denom = 1.0 + r * r - 2.0 * r * np.cos(alphas[:, None] - thetas[None, :])
        g += ((1.0 - r * r) / denom / n) @ f_samples[start:start + thetas.shape[0]]
    return (vecs * g[None, :]) @ vecs.conj().T
