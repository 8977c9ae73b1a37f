# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled evolution and transfer-product kernels."""

import numpy as np

cimport cython
from libc.math cimport log, sqrt

IMPL = "cython"


cdef inline double _cabs2(double complex z) noexcept:
    return z.real * z.real + z.imag * z.imag


cdef void _banded_matvec_batch(long[::1] offsets, double complex[:, ::1] data,
                               double complex[:, ::1] x, double complex[:, ::1] y) noexcept:
    cdef Py_ssize_t n_off = offsets.shape[0]
    cdef Py_ssize_t dim = data.shape[1]
    cdef Py_ssize_t nr = x.shape[1]
    cdef Py_ssize_t o, i, r, col
    cdef long off
    cdef double complex d
    y[:, :] = 0.0
    for o in range(n_off):
        off = offsets[o]
        for i in range(dim):
            col = (i + off) % dim
            if col < 0:
                col += dim
            d = data[o, i]
            if d == 0.0:
                continue
            for r in range(nr):
                y[i, r] = y[i, r] + d * x[col, r]


def banded_matvec(offsets, data, x):
    """y[i] = sum_o data[o, i] * x[(i + off_o) % dim]; x may be (dim,) or (dim, R)."""
    single = x.ndim == 1
    xm = np.ascontiguousarray(x.reshape(x.shape[0], -1), dtype=np.complex128)
    y = np.zeros_like(xm)
    _banded_matvec_batch(np.ascontiguousarray(offsets, dtype=np.int64),
                         np.ascontiguousarray(data, dtype=np.complex128), xm, y)
    return y[:, 0] if single else y


def evolve_state(offsets, data, phases, psi, long n_steps, bint diag_first):
    cdef long[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef double complex[:, ::1] dat = np.ascontiguousarray(data, dtype=np.complex128)
    single = psi.ndim == 1
    cur = np.ascontiguousarray(psi.reshape(psi.shape[0], -1), dtype=np.complex128).copy()
    ph = np.ascontiguousarray(np.broadcast_to(
        phases.reshape(phases.shape[0], -1), cur.shape), dtype=np.complex128)
    nxt = np.empty_like(cur)
    cdef double complex[:, ::1] a = cur, b = nxt, p = ph
    cdef Py_ssize_t dim = cur.shape[0], nr = cur.shape[1]
    cdef Py_ssize_t i, r
    cdef long step
    for step in range(n_steps):
        if diag_first:
            for i in range(dim):
                for r in range(nr):
                    a[i, r] = a[i, r] * p[i, r]
            _banded_matvec_batch(offs, dat, a, b)
        else:
            _banded_matvec_batch(offs, dat, a, b)
            for i in range(dim):
                for r in range(nr):
                    b[i, r] = b[i, r] * p[i, r]
        a, b = b, a
    out = np.asarray(a)
    return out[:, 0] if single else out


def evolve_sup_abs(offsets, data, phases, psi, long n_steps, bint diag_first, sup_out):
    cdef long[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef double complex[:, ::1] dat = np.ascontiguousarray(data, dtype=np.complex128)
    cur = np.ascontiguousarray(psi, dtype=np.complex128).copy()
    ph = np.ascontiguousarray(phases, dtype=np.complex128)
    nxt = np.empty_like(cur)
    cdef double complex[:, ::1] a = cur, b = nxt, p = ph
    cdef double[:, ::1] sup = sup_out
    cdef Py_ssize_t dim = cur.shape[0], nr = cur.shape[1]
    cdef Py_ssize_t i, r
    cdef long step
    cdef double m
    for i in range(dim):
        for r in range(nr):
            m = sqrt(_cabs2(a[i, r]))
            if m > sup[i, r]:
                sup[i, r] = m
    for step in range(n_steps):
        if diag_first:
            for i in range(dim):
                for r in range(nr):
                    a[i, r] = a[i, r] * p[i, r]
            _banded_matvec_batch(offs, dat, a, b)
        else:
            _banded_matvec_batch(offs, dat, a, b)
            for i in range(dim):
                for r in range(nr):
                    b[i, r] = b[i, r] * p[i, r]
        a, b = b, a
        for i in range(dim):
            for r in range(nr):
                m = sqrt(_cabs2(a[i, r]))
                if m > sup[i, r]:
                    sup[i, r] = m
    return np.asarray(a)


def evolve_weighted_series(offsets, data, phases, psi, long n_steps, weights,
                           series_out, bint diag_first):
    cdef long[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef double complex[:, ::1] dat = np.ascontiguousarray(data, dtype=np.complex128)
    cur = np.ascontiguousarray(psi, dtype=np.complex128).copy()
    ph = np.ascontiguousarray(phases, dtype=np.complex128)
    nxt = np.empty_like(cur)
    cdef double complex[:, ::1] a = cur, b = nxt, p = ph
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] series = series_out
    cdef Py_ssize_t dim = cur.shape[0], nr = cur.shape[1]
    cdef Py_ssize_t i, r
    cdef long step
    for r in range(nr):
        series[0, r] = 0.0
    for i in range(dim):
        for r in range(nr):
            series[0, r] += w[i] * _cabs2(a[i, r])
    for step in range(1, n_steps + 1):
        if diag_first:
            for i in range(dim):
                for r in range(nr):
                    a[i, r] = a[i, r] * p[i, r]
            _banded_matvec_batch(offs, dat, a, b)
        else:
            _banded_matvec_batch(offs, dat, a, b)
            for i in range(dim):
                for r in range(nr):
                    b[i, r] = b[i, r] * p[i, r]
        a, b = b, a
        for r in range(nr):
            series[step, r] = 0.0
        for i in range(dim):
            for r in range(nr):
                series[step, r] += w[i] * _cabs2(a[i, r])
    return np.asarray(a)


def transfer_product_lognorm(tmats, v, long renorm_every, log_out):
    cdef double complex[:, :, :, ::1] t = np.ascontiguousarray(tmats, dtype=np.complex128)
    cdef double complex[:, ::1] vv = v
    cdef double[::1] lg = log_out
    cdef Py_ssize_t nr = t.shape[0], n = t.shape[1]
    cdef Py_ssize_t r
    cdef long step
    cdef double complex v0, v1
    cdef double m0, m1, scale
    for r in range(nr):
        for step in range(n):
            v0 = t[r, step, 0, 0] * vv[r, 0] + t[r, step, 0, 1] * vv[r, 1]
            v1 = t[r, step, 1, 0] * vv[r, 0] + t[r, step, 1, 1] * vv[r, 1]
            vv[r, 0] = v0
            vv[r, 1] = v1
            if (step + 1) % renorm_every == 0:
                m0 = sqrt(_cabs2(vv[r, 0]))
                m1 = sqrt(_cabs2(vv[r, 1]))
                scale = m0 if m0 > m1 else m1
                lg[r] += log(scale)
                vv[r, 0] /= scale
                vv[r, 1] /= scale
