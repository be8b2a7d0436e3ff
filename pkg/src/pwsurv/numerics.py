"""Numerically stable log-domain primitives shared by the model heads and loss."""

from __future__ import annotations

import math

import numpy as np


def log_sum_exp(values, weights=None) -> float:
    """log(sum_i w_i * exp(values_i)) computed with a max shift.

    With no weights, w_i = 1. Weights, if given, must be strictly positive.
    The shift by max(values) guarantees no intermediate overflow.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("log_sum_exp needs a non-empty 1-d input")
    if not np.all(np.isfinite(values)):
        raise ValueError("log_sum_exp input must be finite")
    if weights is None:
        return _weighted_lse(values, np.ones_like(values))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != values.shape:
        raise ValueError(
            f"weights shape {weights.shape} does not match values shape {values.shape}"
        )
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
        raise ValueError("weights must be finite and strictly positive")
    return _weighted_lse(values, weights)


def _weighted_lse(values: np.ndarray, weights: np.ndarray) -> float:
    """Max-shifted weighted log-sum-exp; zero weights are permitted and skipped.

    Internal workhorse: requires at least one strictly positive weight and
    performs no input validation.
    """
    mask = weights > 0.0
    if not mask.all():
        values = values[mask]
        weights = weights[mask]
    shift = float(values.max())
    acc = float(np.dot(weights, np.exp(values - shift)))
    return shift + math.log(acc)


def log1m_exp(a: float) -> float:
    """log(1 - exp(a)) for a < 0, accurate both near 0 and for very negative a.

    Switches representation at a = -ln 2: above it 1 - exp(a) loses precision,
    so expm1 is used; below it exp(a) is small and log1p is exact enough.
    """
    a = float(a)
    if not a < 0.0:
        raise ValueError(f"log1m_exp requires a < 0, got {a}")
    if a > -math.log(2.0):
        return math.log(-math.expm1(a))
    return math.log1p(-math.exp(a))
