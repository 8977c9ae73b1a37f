"""Phase distributions on the torus and deterministic disorder sampling.

Sampling contract: realization ``i`` of a model under ``master_seed`` draws
its phases from a Philox generator keyed by ``(master_seed, i)``, consuming
exactly one uniform variate per site in canonical site order.  Regeneration
is bit-for-bit reproducible and realizations are independent streams, so
they can be farmed out in any order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = ["PhaseDistribution", "DisorderRealization", "sample_phases", "phase_rng"]

_TABLE_SIZE = 1 << 16


@dataclass(frozen=True)
class PhaseDistribution:
    """Density tau on [0, 2pi) with support halfwidth beta (angles in [-beta, beta]).

    kinds: ``uniform-full`` (tau = 1/2pi), ``uniform-beta`` (uniform on
    [-beta, beta]), ``tabulated`` (inverse-CDF on a 2^16-point table built
    from user (angle, density) samples), and ``point-mass`` (all phases 0;
    degenerate, for tests only -- it has no density).
    """

    kind: str = "uniform-full"
    beta: float = np.pi
    table_angles: tuple = field(default=(), repr=False)
    table_density: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("uniform-full", "uniform-beta", "tabulated", "point-mass"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "uniform-full":
            object.__setattr__(self, "beta", float(np.pi))
        elif self.kind == "point-mass":
            object.__setattr__(self, "beta", 0.0)
        elif not (0.0 < self.beta <= np.pi):
            raise ValueError(f"support halfwidth beta must lie in (0, pi], got {self.beta}")
        if self.kind == "tabulated":
            object.__setattr__(self, "_inv_cdf", self._build_inverse_cdf())

    def _build_inverse_cdf(self) -> np.ndarray:
        angles = np.asarray(self.table_angles, dtype=float)
        dens = np.asarray(self.table_density, dtype=float)
        if angles.size < 2 or angles.size != dens.size:
            raise ValueError("tabulated density needs matching (angle, density) arrays")
        if np.any(dens < 0):
            raise ValueError("density values must be nonnegative")
        order = np.argsort(angles)
        angles, dens = angles[order], dens[order]
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(angles))])
        if cdf[-1] <= 0:
            raise ValueError("density integrates to zero")
        cdf /= cdf[-1]
        u = np.linspace(0.0, 1.0, _TABLE_SIZE)
        return np.interp(u, cdf, angles)

    def density(self, theta) -> np.ndarray:
        """tau evaluated at angles (interpreted mod 2pi, support centered at 0)."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        centered = np.where(theta > np.pi, theta - TWO_PI, theta)
        if self.kind == "uniform-full":
            return np.full_like(centered, 1.0 / TWO_PI)
        if self.kind == "uniform-beta":
            return np.where(np.abs(centered) <= self.beta, 1.0 / (2.0 * self.beta), 0.0)
        if self.kind == "tabulated":
            angles = np.asarray(self.table_angles, dtype=float)
            dens = np.asarray(self.table_density, dtype=float)
            order = np.argsort(angles)
            raw = np.interp(centered, angles[order], dens[order], left=0.0, right=0.0)
            norm = np.trapezoid(dens[order], angles[order])
            return raw / norm
        raise ValueError("point-mass distribution has no density")

    def ppf(self, u) -> np.ndarray:
        """Inverse CDF mapping uniforms on [0,1) to angles in [0, 2pi)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "point-mass":
            return np.zeros_like(u)
        if self.kind == "uniform-full":
            return TWO_PI * u
        if self.kind == "uniform-beta":
            return np.mod(-self.beta + 2.0 * self.beta * u, TWO_PI)
        table = getattr(self, "_inv_cdf")
        return np.mod(table[np.minimum((u * (_TABLE_SIZE - 1)).astype(np.int64), _TABLE_SIZE - 2)], TWO_PI)

    def support_halfwidth(self) -> float:
        if self.kind == "tabulated":
            angles = np.asarray(self.table_angles, dtype=float)
            dens = np.asarray(self.table_density, dtype=float)
            return float(np.max(np.abs(angles[dens > 0])))
        return self.beta

    @classmethod
    def from_csv(cls, path) -> "PhaseDistribution":
        """Load a tabulated density from CSV rows (angle, density)."""
        angles, dens = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                angles.append(float(row[0]))
                dens.append(float(row[1]))
        return cls(kind="tabulated", beta=float(np.max(np.abs(angles))),
                   table_angles=tuple(angles), table_density=tuple(dens))

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self.kind == "uniform-beta":
            cfg["beta"] = self.beta
        if self.kind == "tabulated":
            cfg["table_angles"] = list(self.table_angles)
            cfg["table_density"] = list(self.table_density)
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "PhaseDistribution":
        return cls(kind=cfg.get("kind", "uniform-full"), beta=cfg.get("beta", np.pi),
                   table_angles=tuple(cfg.get("table_angles", ())),
                   table_density=tuple(cfg.get("table_density", ())))


@dataclass(frozen=True)
class DisorderRealization:
    """One sampled phase configuration with its seed lineage."""

    master_seed: int
    realization_index: int
    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))


def phase_rng(master_seed: int, realization_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        key=np.random.SeedSequence((int(master_seed), int(realization_index))).generate_state(2, np.uint64)))


def sample_phases(dist: PhaseDistribution, master_seed: int, realization_index: int,
                  n_sites: int) -> DisorderRealization:
    """One i.i.d. draw per site, deterministic under (master_seed, realization_index)."""
    rng = phase_rng(master_seed, realization_index)
    u = rng.random(int(n_sites))
    return DisorderRealization(master_seed, realization_index, dist.ppf(u))
