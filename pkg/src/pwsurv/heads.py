"""The four piecewise survival heads.

Each head maps a raw network output vector plus a TimeGrid to the survival
quantities (density f, survival S, hazard h, cumulative hazard H) at any time
in [0, t_max]. Density heads normalize exponentiated outputs so that the mass
on [0, t_max] plus a positive tail S(t_max) equals one; hazard heads
exponentiate outputs directly and integrate.

All survival/density values are computed in the log domain. The density-head
survival numerators are rewritten as sums with non-negative coefficients
(remaining segment mass instead of one-minus-consumed-mass), so log S comes
straight out of a weighted log-sum-exp with no cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import TimeGrid
from .numerics import _weighted_lse


class HeadKind(Enum):
    CONSTANT_DENSITY = "constant-density"
    LINEAR_DENSITY = "linear-density"
    CONSTANT_HAZARD = "constant-hazard"
    LINEAR_HAZARD = "linear-hazard"

    @classmethod
    def from_string(cls, name: str) -> "HeadKind":
        for kind in cls:
            if kind.value == name:
                return kind
        valid = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown head kind {name!r}; expected one of: {valid}")


def output_dim(kind: HeadKind, n_segments: int) -> int:
    """Required network output dimension for a head on an N-segment grid."""
    if n_segments < 1:
        raise ValueError("grid needs at least one segment")
    return {
        HeadKind.CONSTANT_DENSITY: n_segments + 1,
        HeadKind.LINEAR_DENSITY: n_segments + 2,
        HeadKind.CONSTANT_HAZARD: n_segments,
        HeadKind.LINEAR_HAZARD: n_segments + 1,
    }[kind]


@dataclass(frozen=True)
class HeadEvaluation:
    """Survival quantities of one head at one time point."""

    log_density: float
    log_survival: float
    hazard: float
    cumulative_hazard: float

    @property
    def density(self) -> float:
        return math.exp(self.log_density)

    @property
    def survival(self) -> float:
        return math.exp(self.log_survival)


def _check_outputs(outputs, required: int, kind_name: str) -> np.ndarray:
    z = np.ascontiguousarray(outputs, dtype=np.float64)
    if z.ndim != 1 or z.size != required:
        raise ValueError(
            f"{kind_name} head needs exactly {required} outputs, got shape {z.shape}"
        )
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{kind_name} head outputs must be finite")
    return z


# ---------------------------------------------------------------------------
# constant density

def _constant_density_log_norm(z: np.ndarray, grid: TimeGrid) -> float:
    # Z = exp(z_N) + sum_j width_j * exp(z_j)
    weights = np.append(grid.widths, 1.0)
    return _weighted_lse(z, weights)


def density_levels_constant(outputs, grid: TimeGrid) -> np.ndarray:
    """Per-segment density levels f_0..f_{N-1} of the constant-density head.

    The last output sets the survival level at t_max; the normalizer makes
    the segment masses plus that tail sum to one.
    """
    n = grid.n_segments
    z = _check_outputs(outputs, n + 1, "constant-density")
    log_norm = _constant_density_log_norm(z, grid)
    return np.exp(z[:n] - log_norm)


def eval_constant_density(outputs, grid: TimeGrid, t: float) -> HeadEvaluation:
    """Evaluate the piecewise constant density head at time t."""
    n = grid.n_segments
    z = _check_outputs(outputs, n + 1, "constant-density")
    seg = grid.segment_index(t)
    log_norm = _constant_density_log_norm(z, grid)
    log_density = z[seg] - log_norm

    if t == 0.0:
        log_survival = 0.0
    else:
        # S(t)*Z = (tau_{seg+1} - t) e^{z_seg} + sum_{j>seg} width_j e^{z_j} + e^{z_N}
        w = np.zeros(n + 1)
        w[seg] = grid.points[seg + 1] - t
        w[seg + 1 : n] = grid.widths[seg + 1 :]
        w[n] = 1.0
        log_survival = min(_weighted_lse(z, w) - log_norm, 0.0)

    hazard = math.exp(log_density - log_survival)
    return HeadEvaluation(log_density, log_survival, hazard, -log_survival)


# ---------------------------------------------------------------------------
# linear density

def _linear_density_norm_weights(grid: TimeGrid) -> np.ndarray:
    # trapezoid coefficients: each segment contributes width/2 to both endpoints
    n = grid.n_segments
    w = np.zeros(n + 2)
    w[:n] += grid.widths / 2.0
    w[1 : n + 1] += grid.widths / 2.0
    w[n + 1] = 1.0
    return w


def density_nodes_linear(outputs, grid: TimeGrid) -> np.ndarray:
    """Node density values f_0..f_N of the linear-density head.

    The normalizer is the tail weight exp(z_{N+1}) plus the total trapezoid
    mass of the interpolated density, so node values are already scaled to
    make the distribution proper.
    """
    n = grid.n_segments
    z = _check_outputs(outputs, n + 2, "linear-density")
    log_norm = _weighted_lse(z, _linear_density_norm_weights(grid))
    return np.exp(z[: n + 1] - log_norm)


def eval_linear_density(outputs, grid: TimeGrid, t: float) -> HeadEvaluation:
    """Evaluate the piecewise linear (continuous) density head at time t."""
    n = grid.n_segments
    z = _check_outputs(outputs, n + 2, "linear-density")
    seg = grid.segment_index(t)
    log_norm = _weighted_lse(z, _linear_density_norm_weights(grid))

    width = grid.widths[seg]
    s = t - grid.points[seg]
    frac = s / width
    interp = np.zeros(n + 2)
    interp[seg] = 1.0 - frac
    interp[seg + 1] = frac
    log_density = _weighted_lse(z, interp) - log_norm

    if t == 0.0:
        log_survival = 0.0
    else:
        # Remaining mass within segment seg splits over its endpoints with
        # coefficients (width-s)^2/(2 width) and (width^2-s^2)/(2 width);
        # later segments contribute their full trapezoid weights.
        w = np.zeros(n + 2)
        w[seg] = (width - s) * (width - s) / (2.0 * width)
        w[seg + 1] = (width - s) * (width + s) / (2.0 * width)
        w[seg + 1 : n] += grid.widths[seg + 1 :] / 2.0
        w[seg + 2 : n + 1] += grid.widths[seg + 1 :] / 2.0
        w[n + 1] = 1.0
        log_survival = min(_weighted_lse(z, w) - log_norm, 0.0)

    hazard = math.exp(log_density - log_survival)
    return HeadEvaluation(log_density, log_survival, hazard, -log_survival)


# ---------------------------------------------------------------------------
# constant hazard

def hazard_levels_constant(outputs) -> np.ndarray:
    """Per-segment hazard levels: elementwise exponential of the outputs."""
    z = np.ascontiguousarray(outputs, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("constant-hazard head needs a non-empty 1-d output vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("constant-hazard head outputs must be finite")
    return np.exp(z)


def eval_constant_hazard(outputs, grid: TimeGrid, t: float) -> HeadEvaluation:
    """Evaluate the piecewise constant hazard head at time t."""
    n = grid.n_segments
    z = _check_outputs(outputs, n, "constant-hazard")
    seg = grid.segment_index(t)
    s = t - grid.points[seg]
    levels = np.exp(z)
    cum_hazard = float(np.dot(grid.widths[:seg], levels[:seg])) + s * levels[seg]
    log_density = z[seg] - cum_hazard
    return HeadEvaluation(log_density, -cum_hazard, float(levels[seg]), cum_hazard)


# ---------------------------------------------------------------------------
# linear hazard

def eval_linear_hazard(outputs, grid: TimeGrid, t: float) -> HeadEvaluation:
    """Evaluate the piecewise linear (continuous) hazard head at time t."""
    n = grid.n_segments
    z = _check_outputs(outputs, n + 1, "linear-hazard")
    seg = grid.segment_index(t)
    width = grid.widths[seg]
    s = t - grid.points[seg]
    frac = s / width

    levels = np.exp(z)
    # full segments before seg contribute trapezoids; the partial segment
    # contributes (s - s^2/(2w)) h_seg + (s^2/(2w)) h_{seg+1}
    coef = np.zeros(n + 1)
    coef[:seg] += grid.widths[:seg] / 2.0
    coef[1 : seg + 1] += grid.widths[:seg] / 2.0
    coef[seg] += s - s * s / (2.0 * width)
    coef[seg + 1] += s * s / (2.0 * width)
    cum_hazard = float(np.dot(coef, levels))

    interp = np.zeros(n + 1)
    interp[seg] = 1.0 - frac
    interp[seg + 1] = frac
    log_hazard = _weighted_lse(z, interp)
    return HeadEvaluation(
        log_hazard - cum_hazard, -cum_hazard, math.exp(log_hazard), cum_hazard
    )


_EVALUATORS = {
    HeadKind.CONSTANT_DENSITY: eval_constant_density,
    HeadKind.LINEAR_DENSITY: eval_linear_density,
    HeadKind.CONSTANT_HAZARD: eval_constant_hazard,
    HeadKind.LINEAR_HAZARD: eval_linear_hazard,
}


def evaluate(kind: HeadKind, outputs, grid: TimeGrid, t: float) -> HeadEvaluation:
    """Evaluate any head kind at time t."""
    return _EVALUATORS[kind](outputs, grid, t)
