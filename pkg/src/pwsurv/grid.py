"""Time-discretization grid on [0, t_max] with segment-index lookup.

A grid with points tau_0 = 0 < tau_1 < ... < tau_N = t_max partitions the
horizon into N segments [tau_i, tau_{i+1}). Every piecewise model head is
defined relative to such a grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Ordered partition of [0, t_max].

    Segments follow the half-open convention [tau_i, tau_{i+1}); the last
    segment is closed on the right so that t_max itself is evaluable.
    """

    points: np.ndarray
    widths: np.ndarray = field(init=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least 2 points (1 segment)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if pts[0] != 0.0:
            raise ValueError(f"first grid point must be 0, got {pts[0]}")
        widths = np.diff(pts)
        if np.any(widths <= 0.0):
            raise ValueError("grid points must be strictly increasing")
        pts.flags.writeable = False
        widths.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "widths", widths)

    @property
    def n_segments(self) -> int:
        return self.points.size - 1

    @property
    def t_max(self) -> float:
        return float(self.points[-1])

    def segment_index(self, t: float) -> int:
        """Index of the segment containing t; t = t_max maps to the last segment."""
        t = float(t)
        if not 0.0 <= t <= self.t_max:
            raise ValueError(f"time {t} outside grid domain [0, {self.t_max}]")
        idx = int(np.searchsorted(self.points, t, side="right")) - 1
        return min(idx, self.n_segments - 1)

    def segment_indices(self, times: np.ndarray) -> np.ndarray:
        """Vectorized segment lookup; rejects any time outside [0, t_max]."""
        times = np.asarray(times, dtype=np.float64)
        bad = (times < 0.0) | (times > self.t_max) | ~np.isfinite(times)
        if np.any(bad):
            offenders = times[bad][:5]
            raise ValueError(
                f"{int(bad.sum())} time(s) outside grid domain [0, {self.t_max}]: "
                f"{offenders.tolist()}"
            )
        idx = np.searchsorted(self.points, times, side="right") - 1
        return np.minimum(idx, self.n_segments - 1).astype(np.int64)


def make_uniform_grid(t_max: float, n_points: int) -> TimeGrid:
    """Uniformly spaced grid with n_points points from 0 to t_max inclusive."""
    t_max = float(t_max)
    if not np.isfinite(t_max) or t_max <= 0.0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    n_points = int(n_points)
    if n_points < 2:
        raise ValueError(f"need at least 2 grid points, got {n_points}")
    return TimeGrid(np.linspace(0.0, t_max, n_points))
