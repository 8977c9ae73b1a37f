"""Banded complex matrices stored by diagonals, with optional periodic wrap."""

from __future__ import annotations

import json

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ComplexBandMatrix",
    "matvec",
    "unitarity_residual",
    "UNITARITY_TOL",
    "DENSE_EIG_LIMIT",
]

UNITARITY_TOL = 1e-12
DENSE_EIG_LIMIT = 4096


def _canonical_offset(off: int, dim: int) -> int:
    """Reduce a diagonal offset mod dim to the centered representative."""
    off = off % dim
    if off > dim // 2:
        off -= dim
    return off


class ComplexBandMatrix:
    """Square complex matrix with entries confined to a few (possibly wrapped) diagonals.

    Diagonal ``o`` holds ``data[o][i] = M[i, (i + o) % dim]``.  Offsets are kept
    in the centered representative ``(-dim//2, dim//2]``.  When ``periodic`` is
    False, entries whose column index would wrap are required to vanish.
    """

    def __init__(self, dim, diagonals, periodic=False, labels=None, unitary=False):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self.periodic = bool(periodic)
        self.unitary = bool(unitary)
        self.labels = None if labels is None else np.asarray(labels)
        if self.labels is not None and self.labels.shape[0] != self.dim:
            raise ValueError("labels length must equal dim")
        data: dict[int, np.ndarray] = {}
        for off, diag in diagonals.items():
            off = _canonical_offset(int(off), self.dim)
            arr = np.asarray(diag, dtype=np.complex128)
            if arr.shape != (self.dim,):
                raise ValueError(f"diagonal {off} has shape {arr.shape}, want ({self.dim},)")
            if off in data:
                data[off] = data[off] + arr
            else:
                data[off] = arr.copy()
        if not self.periodic:
            for off, arr in data.items():
                rows = np.arange(self.dim)
                wraps = (rows + off < 0) | (rows + off >= self.dim)
                if np.any(arr[wraps] != 0):
                    raise ValueError(f"wrap entries on diagonal {off} require periodic=True")
        self._data = data

    @property
    def offsets(self):
        return sorted(self._data)

    @property
    def lower_bw(self) -> int:
        return max((-o for o in self._data if o < 0), default=0)

    @property
    def upper_bw(self) -> int:
        return max((o for o in self._data if o > 0), default=0)

    def diagonal(self, off: int) -> np.ndarray:
        off = _canonical_offset(off, self.dim)
        if off in self._data:
            return self._data[off]
        return np.zeros(self.dim, dtype=np.complex128)

    def entry(self, i: int, j: int) -> complex:
        off = _canonical_offset(j - i, self.dim)
        if off not in self._data:
            return 0.0 + 0.0j
        if not self.periodic and (i + off != j):
            return 0.0 + 0.0j
        return complex(self._data[off][i])

    def kernel_arrays(self):
        """(offsets, data) arrays in the layout the evolution kernels consume."""
        offs = np.array(self.offsets, dtype=np.int64)
        data = np.stack([self._data[o] for o in self.offsets]) if self.offsets else np.zeros((0, self.dim), dtype=np.complex128)
        return offs, data

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if v.shape[0] != self.dim:
            raise ValueError(f"vector length {v.shape[0]} != dim {self.dim}")
        out = np.zeros_like(v)
        idx = np.arange(self.dim)
        for off, arr in self._data.items():
            cols = (idx + off) % self.dim
            if v.ndim == 1:
                out += arr * v[cols]
            else:
                out += arr[:, None] * v[cols, :]
        return out

    def adjoint(self) -> "ComplexBandMatrix":
        idx = np.arange(self.dim)
        diags = {}
        for off, arr in self._data.items():
            cols = (idx + (-off)) % self.dim
            diags[-off] = np.conj(arr[cols])
        return ComplexBandMatrix(self.dim, diags, periodic=self.periodic,
                                 labels=self.labels, unitary=self.unitary)

    def to_csr(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        idx = np.arange(self.dim)
        for off, arr in self._data.items():
            nz = arr != 0
            rows.append(idx[nz])
            cols.append((idx[nz] + off) % self.dim)
            vals.append(arr[nz])
        if rows:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            vals = np.concatenate(vals)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    @classmethod
    def from_dense(cls, mat, periodic=False, labels=None, unitary=False, tol=0.0):
        mat = np.asarray(mat, dtype=np.complex128)
        n = mat.shape[0]
        if mat.shape != (n, n):
            raise ValueError("matrix must be square")
        diags = {}
        idx = np.arange(n)
        for off in range(-(n // 2), n - n // 2):
            vals = mat[idx, (idx + off) % n]
            if not periodic:
                inside = (idx + off >= 0) & (idx + off < n)
                vals = np.where(inside, vals, 0.0)
            if np.any(np.abs(vals) > tol):
                diags[off] = vals
        return cls(n, diags, periodic=periodic, labels=labels, unitary=unitary)

    @classmethod
    def from_csr(cls, mat: sp.spmatrix, periodic=False, labels=None, unitary=False):
        mat = mat.tocoo()
        n = mat.shape[0]
        diags: dict[int, np.ndarray] = {}
        for i, j, v in zip(mat.row, mat.col, mat.data):
            if v == 0:
                continue
            off = _canonical_offset(int(j) - int(i), n)
            diags.setdefault(off, np.zeros(n, dtype=np.complex128))[i] += v
        return cls(n, diags, periodic=periodic, labels=labels, unitary=unitary)

    def __matmul__(self, other):
        if isinstance(other, ComplexBandMatrix):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            prod = self.to_csr() @ other.to_csr()
            return ComplexBandMatrix.from_csr(
                prod, periodic=self.periodic or other.periodic, labels=self.labels)
        return self.matvec(other)

    def to_json(self) -> str:
        """Serialize to the documented debugging form (diagonals as [re, im] pairs)."""
        payload = {
            "dim": self.dim,
            "lower_bw": self.lower_bw,
            "upper_bw": self.upper_bw,
            "periodic": self.periodic,
            "unitary": self.unitary,
            "diagonals": {
                str(off): [[float(x.real), float(x.imag)] for x in arr]
                for off, arr in sorted(self._data.items())
            },
        }
        if self.labels is not None:
            payload["labels"] = self.labels.tolist()
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "ComplexBandMatrix":
        payload = json.loads(text)
        diags = {
            int(off): np.array([complex(re, im) for re, im in pairs])
            for off, pairs in payload["diagonals"].items()
        }
        return cls(payload["dim"], diags, periodic=payload["periodic"],
                   labels=payload.get("labels"), unitary=payload["unitary"])

    def __repr__(self):
        return (f"ComplexBandMatrix(dim={self.dim}, offsets={self.offsets}, "
                f"periodic={self.periodic}, unitary={self.unitary})")


def matvec(m: ComplexBandMatrix, v: np.ndarray) -> np.ndarray:
    """Banded matrix-vector product; cost O(dim x bandwidth)."""
    return m.matvec(v)


def unitarity_residual(m: ComplexBandMatrix) -> float:
    """Max-norm of M*M - I."""
    g = (m.adjoint().to_csr() @ m.to_csr() - sp.identity(m.dim, format="csr")).tocoo()
    return float(np.max(np.abs(g.data))) if g.nnz else 0.0
