"""Least-squares fits shared by the decay and transport diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LineFit", "DecayFit", "linear_fit", "decay_fit", "NEAR_FIELD_CUTOFF"]

NEAR_FIELD_CUTOFF = 4  # bandwidth-4 near field excluded from decay fits


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float
    residual: float
    n_points: int


@dataclass(frozen=True)
class DecayFit:
    """log(mean) = log(C) - alpha * distance over the far field."""

    alpha: float
    prefactor: float
    r_squared: float
    n_points: int
    degenerate: bool = False

    def to_dict(self):
        return {"alpha": self.alpha, "C": self.prefactor,
                "r_squared": self.r_squared, "n_points": self.n_points,
                "degenerate": self.degenerate}


def linear_fit(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points")
    coeffs, res = np.polyfit(x, y, 1), 0.0
    pred = np.polyval(coeffs, x)
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LineFit(float(coeffs[0]), float(coeffs[1]), r2,
                   float(np.sqrt(ss_res / x.size)), int(x.size))


def decay_fit(distances, means, min_points: int = 5,
              near_field: int = NEAR_FIELD_CUTOFF) -> DecayFit:
    """OLS on the log of realization-averaged values against distance."""
    distances = np.asarray(distances, dtype=float)
    means = np.asarray(means, dtype=float)
    keep = (distances >= near_field) & (means > 0)
    if np.count_nonzero(keep) < min_points:
        return DecayFit(0.0, 0.0, 0.0, int(np.count_nonzero(keep)), degenerate=True)
    fit = linear_fit(distances[keep], np.log(means[keep]))
    return DecayFit(-fit.slope, float(np.exp(fit.intercept)), fit.r_squared, fit.n_points)
