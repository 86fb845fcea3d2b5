"""Finite unions of closed intervals, used for stopping sets and strategies."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Region:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = sorted((float(lo), float(hi)) for lo, hi in self.intervals)
        merged: list[list[float]] = []
        for lo, hi in ivs:
            if lo > hi:
                continue
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        object.__setattr__(self, "intervals", tuple((lo, hi) for lo, hi in merged))

    @classmethod
    def everything(cls) -> "Region":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def above(cls, b: float) -> "Region":
        return cls(((b, math.inf),))

    @classmethod
    def below(cls, b: float) -> "Region":
        return cls(((-math.inf, b),))

    @property
    def empty(self) -> bool:
        return not self.intervals

    @property
    def boundaries(self) -> tuple[float, ...]:
        pts = []
        for lo, hi in self.intervals:
            pts.extend(p for p in (lo, hi) if math.isfinite(p))
        return tuple(pts)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x >= lo) & (x <= hi)
        return out if out.ndim else bool(out)

    def distance(self, x):
        """Distance to the region (0 inside, inf if the region is empty)."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, np.inf)
        for lo, hi in self.intervals:
            d = np.maximum(np.maximum(lo - x, x - hi), 0.0)
            out = np.minimum(out, d)
        return out

    def shift_boundary(self, index: int, delta: float) -> "Region":
        """Move the index-th finite boundary point by delta."""
        pts = []
        for i, (lo, hi) in enumerate(self.intervals):
            pts.append([i, 0, lo])
            pts.append([i, 1, hi])
        finite = [p for p in pts if math.isfinite(p[2])]
        finite[index][2] += delta
        ivs = [[lo, hi] for lo, hi in self.intervals]
        for i, side, v in finite:
            ivs[i][side] = v
        return Region(tuple(tuple(iv) for iv in ivs))

    def __str__(self):
        if self.empty:
            return "{}"
        parts = []
        for lo, hi in self.intervals:
            left = "(-inf" if lo == -math.inf else f"[{lo:.10g}"
            right = "inf)" if hi == math.inf else f"{hi:.10g}]"
            parts.append(f"{left}, {right}")
        return " U ".join(parts)
