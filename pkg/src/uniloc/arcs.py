"""Unions of positively oriented closed arcs on the unit circle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = ["ArcSet", "TWO_PI"]


def _wrap(angle):
    return np.mod(angle, TWO_PI)


@dataclass(frozen=True)
class ArcSet:
    """Finite union of closed arcs, each stored as (start angle, length].

    Arcs are normalized on construction: starts wrapped into [0, 2pi),
    overlapping or touching arcs merged, total length capped at the full
    circle.  A single arc of length 2pi is the full circle.
    """

    arcs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "arcs", self._normalize(self.arcs))

    @staticmethod
    def _normalize(raw):
        cleaned = []
        for start, length in raw:
            if length <= 0:
                raise ValueError(f"arc length must be positive, got {length}")
            if length >= TWO_PI:
                return ((0.0, TWO_PI),)
            cleaned.append((float(_wrap(start)), float(length)))
        if not cleaned:
            return ()
        cleaned.sort()
        # Split arcs crossing 2pi so merging is a linear sweep.
        pieces = []
        for start, length in cleaned:
            if start + length <= TWO_PI:
                pieces.append([start, start + length])
            else:
                pieces.append([start, TWO_PI])
                pieces.append([0.0, start + length - TWO_PI])
        pieces.sort()
        merged = [pieces[0]]
        for lo, hi in pieces[1:]:
            if lo <= merged[-1][1] + 1e-15:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        # Re-join a pair wrapping through 0/2pi.
        if len(merged) > 1 and merged[0][0] <= 1e-15 and merged[-1][1] >= TWO_PI - 1e-15:
            first = merged.pop(0)
            merged[-1][1] = TWO_PI + first[1]
        out = tuple((lo, hi - lo) for lo, hi in merged)
        if sum(l for _, l in out) >= TWO_PI:
            return ((0.0, TWO_PI),)
        return out

    @classmethod
    def full_circle(cls) -> "ArcSet":
        return cls(((0.0, TWO_PI),))

    @classmethod
    def interval(cls, a: float, b: float) -> "ArcSet":
        """Closed arc from angle a to angle b, positively oriented."""
        length = _wrap(b - a)
        if length == 0.0 and b != a:
            length = TWO_PI
        if length == 0.0:
            # Degenerate arc {e^{ia}}: keep a sliver of zero measure via tiny length.
            return cls(((a, 1e-300),))
        return cls(((a, length),))

    @classmethod
    def symmetric(cls, halfwidth: float) -> "ArcSet":
        """Arc of angles in [-halfwidth, halfwidth]."""
        if halfwidth <= 0:
            return cls(((0.0, 1e-300),))
        if halfwidth >= np.pi:
            return cls.full_circle()
        return cls(((-halfwidth, 2.0 * halfwidth),))

    @property
    def is_full_circle(self) -> bool:
        return len(self.arcs) == 1 and self.arcs[0][1] >= TWO_PI

    @property
    def is_empty(self) -> bool:
        return len(self.arcs) == 0

    def total_length(self) -> float:
        return float(sum(l for _, l in self.arcs))

    def contains(self, angles, tol: float = 0.0):
        """Boolean mask: angle within tol of the arc set (closed arcs)."""
        angles = np.atleast_1d(np.asarray(angles, dtype=float))
        result = np.zeros(angles.shape, dtype=bool)
        if self.is_full_circle:
            return result | True
        for start, length in self.arcs:
            rel = _wrap(angles - start + tol)
            result |= rel <= length + 2.0 * tol
        return result

    def complement(self) -> "ArcSet":
        """Closure of the complementary arcs."""
        if self.is_empty:
            return ArcSet.full_circle()
        if self.is_full_circle:
            return ArcSet()
        ends = sorted((_wrap(s), _wrap(s + l)) for s, l in self.arcs)
        gaps = []
        for i, (start, _) in enumerate(ends):
            prev_end = ends[i - 1][1]
            length = _wrap(start - prev_end)
            if length > 0:
                gaps.append((prev_end, length))
        return ArcSet(tuple(gaps))

    def __iter__(self):
        return iter(self.arcs)
