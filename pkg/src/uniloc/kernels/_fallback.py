"""Pure-numpy evolution and transfer-product kernels (fallback path)."""

from __future__ import annotations

import numpy as np

IMPL = "numpy"


def banded_matvec(offsets, data, x):
    """y[i] = sum_o data[o, i] * x[(i + off_o) % dim]; x may be (dim,) or (dim, R)."""
    dim = data.shape[1]
    idx = np.arange(dim)
    y = np.zeros_like(x)
    for o in range(offsets.shape[0]):
        cols = (idx + offsets[o]) % dim
        if x.ndim == 1:
            y += data[o] * x[cols]
        else:
            y += data[o][:, None] * x[cols, :]
    return y


def evolve_state(offsets, data, phases, psi, n_steps, diag_first):
    """n_steps applications of D S (diag_first=False) or S D (diag_first=True).

    ``phases`` holds the diagonal factor entries (complex, typically
    e^{-i theta}), broadcast against psi of shape (dim,) or (dim, R).
    """
    for _ in range(n_steps):
        if diag_first:
            psi = banded_matvec(offsets, data, phases * psi)
        else:
            psi = phases * banded_matvec(offsets, data, psi)
    return psi


def evolve_sup_abs(offsets, data, phases, psi, n_steps, diag_first, sup_out):
    """Evolve while folding |psi| into sup_out (running max, in place)."""
    np.maximum(sup_out, np.abs(psi), out=sup_out)
    for _ in range(n_steps):
        if diag_first:
            psi = banded_matvec(offsets, data, phases * psi)
        else:
            psi = phases * banded_matvec(offsets, data, psi)
        np.maximum(sup_out, np.abs(psi), out=sup_out)
    return psi


def evolve_weighted_series(offsets, data, phases, psi, n_steps, weights, series_out, diag_first):
    """Evolve recording sum_i weights[i] |psi[i, r]|^2 at steps 0..n_steps."""
    w = weights if psi.ndim == 1 else weights[:, None]
    series_out[0] = np.sum(w * np.abs(psi) ** 2, axis=0)
    for n in range(1, n_steps + 1):
        if diag_first:
            psi = banded_matvec(offsets, data, phases * psi)
        else:
            psi = phases * banded_matvec(offsets, data, psi)
        series_out[n] = np.sum(w * np.abs(psi) ** 2, axis=0)
    return psi


def transfer_product_lognorm(tmats, v, renorm_every, log_out):
    """Accumulate log of max-norm renormalizations of products T_n ... T_1 v.

    ``tmats`` is (R, n, 2, 2), ``v`` is (R, 2) updated in place (left
    unnormalized since the last renorm point); ``log_out`` (R,) accumulates
    the stripped log factors so that log_out + log||v|| recovers the exact
    unrenormalized log norm.
    """
    n = tmats.shape[1]
    for step in range(n):
        t = tmats[:, step]
        v0 = t[:, 0, 0] * v[:, 0] + t[:, 0, 1] * v[:, 1]
        v1 = t[:, 1, 0] * v[:, 0] + t[:, 1, 1] * v[:, 1]
        v[:, 0] = v0
        v[:, 1] = v1
        if (step + 1) % renorm_every == 0:
            scale = np.maximum(np.abs(v[:, 0]), np.abs(v[:, 1]))
            log_out += np.log(scale)
            v /= scale[:, None]
