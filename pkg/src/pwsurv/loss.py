"""Negative mean log-likelihood for right-censored data and its output gradient.

An event record contributes log f(time | x), a censored record log S(time | x);
the dataset loss is the negative mean of these contributions, so its magnitude
does not depend on dataset size.
"""

from __future__ import annotations

import numpy as np

from . import _kernels, heads, network
from .data import Dataset, SurvivalRecord
from .grid import TimeGrid
from .heads import HeadKind


def record_log_likelihood(
    kind: HeadKind, outputs, grid: TimeGrid, record: SurvivalRecord
) -> float:
    """log f(time|x) for an event record, log S(time|x) for a censored one."""
    ev = heads.evaluate(kind, outputs, grid, record.time)
    return ev.log_density if record.event else ev.log_survival


def loss_grad_z(
    kind: HeadKind, outputs, grid: TimeGrid, record: SurvivalRecord
) -> np.ndarray:
    """Gradient of the per-record negative log-likelihood w.r.t. the raw outputs."""
    z = np.ascontiguousarray(outputs, dtype=np.float64).reshape(1, -1)
    required = heads.output_dim(kind, grid.n_segments)
    if z.shape[1] != required:
        raise ValueError(
            f"{kind.value} head needs exactly {required} outputs, got {z.shape[1]}"
        )
    times = np.array([record.time], dtype=np.float64)
    seg = grid.segment_indices(times)
    event = np.array([record.event], dtype=bool)
    _, grad = _kernels.loglik_grad(
        kind.value, z, grid.points, grid.widths, times, seg, event
    )
    return -grad[0]


def batch_loglik_grad(
    kind: HeadKind,
    outputs: np.ndarray,
    grid: TimeGrid,
    times: np.ndarray,
    events: np.ndarray,
    seg: np.ndarray | None = None,
):
    """Per-record log-likelihoods and gradients for a whole batch.

    `outputs` is the (n, m) matrix of raw network outputs; `seg` may carry
    precomputed segment indices to avoid the lookup inside training loops.
    """
    z = np.ascontiguousarray(outputs, dtype=np.float64)
    required = heads.output_dim(kind, grid.n_segments)
    if z.ndim != 2 or z.shape[1] != required:
        raise ValueError(
            f"{kind.value} head needs output shape (n, {required}), got {z.shape}"
        )
    times = np.ascontiguousarray(times, dtype=np.float64)
    if seg is None:
        seg = grid.segment_indices(times)
    events = np.ascontiguousarray(events, dtype=bool)
    return _kernels.loglik_grad(
        kind.value, z, grid.points, grid.widths, times, seg, events
    )


def _as_arrays(records):
    if isinstance(records, Dataset):
        if len(records) == 0:
            raise ValueError("dataset is empty")
        return records.covariates, records.times, records.events
    records = list(records)
    if not records:
        raise ValueError("dataset is empty")
    x = np.stack([np.asarray(r.covariates, dtype=np.float64) for r in records])
    t = np.array([r.time for r in records], dtype=np.float64)
    e = np.array([r.event for r in records], dtype=bool)
    return x, t, e


def dataset_loss(
    kind: HeadKind, params: network.NetworkParams, grid: TimeGrid, records
) -> float:
    """Negative mean log-likelihood of a dataset under the current parameters."""
    x, times, events = _as_arrays(records)
    outputs, _ = network.forward(params, x)
    ll, _ = batch_loglik_grad(kind, outputs, grid, times, events)
    return -float(ll.mean())
