"""Batched per-record log-likelihood and gradient kernels for the four heads.

These loops dominate training time, so they are JIT-compiled with numba when
available. The same source runs as a pure-NumPy/Python fallback when numba is
missing or when the environment variable PWSURV_NUMBA is set to 0/false/off;
`benchmarks/bench_kernels.py` compares the two paths.

Each kernel takes the raw network outputs for a batch (n, m), the grid
(points, widths), recorded times, precomputed segment indices and event flags,
and returns the per-record log-likelihood plus its gradient with respect to
the outputs. For the density heads both the likelihood and its gradient come
from shifted weighted log-sum-exp accumulations: the gradient is a difference
of two softmax-style weight vectors (numerator vs normalizer), so nothing
leaves the log domain unshifted.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_ENV_FLAG = os.environ.get("PWSURV_NUMBA", "1").strip().lower()
NUMBA_DISABLED_BY_ENV = _ENV_FLAG in ("0", "false", "no", "off")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None
    HAS_NUMBA = False
    if not NUMBA_DISABLED_BY_ENV:
        warnings.warn("numba not installed; falling back to the pure-NumPy kernels")

USE_NUMBA = HAS_NUMBA and not NUMBA_DISABLED_BY_ENV


def _constant_density_loglik_grad(z, points, widths, times, seg, event):
    n, m = z.shape
    nseg = m - 1
    ll = np.empty(n)
    grad = np.empty((n, m))
    norm_w = np.empty(m)
    for j in range(nseg):
        norm_w[j] = widths[j]
    norm_w[nseg] = 1.0
    p_norm = np.empty(m)
    for r in range(n):
        zr = z[r]
        k = seg[r]
        # normalizer: exp(z_N) + sum_j width_j exp(z_j), all weights positive
        shift = zr[0]
        for j in range(1, m):
            if zr[j] > shift:
                shift = zr[j]
        total = 0.0
        for j in range(m):
            p_norm[j] = norm_w[j] * np.exp(zr[j] - shift)
            total += p_norm[j]
        log_norm = shift + np.log(total)
        inv = 1.0 / total
        if event[r]:
            ll[r] = zr[k] - log_norm
            for j in range(m):
                grad[r, j] = -p_norm[j] * inv
            grad[r, k] += 1.0
        else:
            # survival numerator: remaining width of segment k, full widths
            # of later segments, tail weight 1
            w0 = points[k + 1] - times[r]
            nshift = zr[nseg]
            if w0 > 0.0 and zr[k] > nshift:
                nshift = zr[k]
            for j in range(k + 1, nseg):
                if zr[j] > nshift:
                    nshift = zr[j]
            e_k = w0 * np.exp(zr[k] - nshift) if w0 > 0.0 else 0.0
            ntotal = e_k + np.exp(zr[nseg] - nshift)
            for j in range(k + 1, nseg):
                ntotal += widths[j] * np.exp(zr[j] - nshift)
            log_num = nshift + np.log(ntotal)
            ll[r] = log_num - log_norm
            ninv = 1.0 / ntotal
            for j in range(m):
                grad[r, j] = -p_norm[j] * inv
            grad[r, k] += e_k * ninv
            for j in range(k + 1, nseg):
                grad[r, j] += widths[j] * np.exp(zr[j] - nshift) * ninv
            grad[r, nseg] += np.exp(zr[nseg] - nshift) * ninv
    return ll, grad


def _linear_density_loglik_grad(z, points, widths, times, seg, event):
    n, m = z.shape
    nseg = m - 2
    ll = np.empty(n)
    grad = np.empty((n, m))
    # trapezoid normalizer weights: width/2 to both segment endpoints, 1 to the tail
    norm_w = np.zeros(m)
    for i in range(nseg):
        norm_w[i] += 0.5 * widths[i]
        norm_w[i + 1] += 0.5 * widths[i]
    norm_w[nseg + 1] = 1.0
    num_w = np.empty(m)
    p_norm = np.empty(m)
    for r in range(n):
        zr = z[r]
        k = seg[r]
        width = widths[k]
        s = times[r] - points[k]
        shift = zr[0]
        for j in range(1, m):
            if zr[j] > shift:
                shift = zr[j]
        total = 0.0
        for j in range(m):
            p_norm[j] = norm_w[j] * np.exp(zr[j] - shift)
            total += p_norm[j]
        log_norm = shift + np.log(total)
        inv = 1.0 / total

        for j in range(m):
            num_w[j] = 0.0
        if event[r]:
            # density numerator: linear interpolation between the two node values
            frac = s / width
            num_w[k] = 1.0 - frac
            num_w[k + 1] = frac
        else:
            # survival numerator: remaining mass of segment k split over its
            # endpoints, full trapezoids of later segments, tail weight 1
            num_w[k] = (width - s) * (width - s) / (2.0 * width)
            num_w[k + 1] = (width - s) * (width + s) / (2.0 * width)
            for i in range(k + 1, nseg):
                num_w[i] += 0.5 * widths[i]
                num_w[i + 1] += 0.5 * widths[i]
            num_w[nseg + 1] += 1.0
        nshift = -np.inf
        for j in range(m):
            if num_w[j] > 0.0 and zr[j] > nshift:
                nshift = zr[j]
        ntotal = 0.0
        for j in range(m):
            if num_w[j] > 0.0:
                ntotal += num_w[j] * np.exp(zr[j] - nshift)
        log_num = nshift + np.log(ntotal)
        ll[r] = log_num - log_norm
        ninv = 1.0 / ntotal
        for j in range(m):
            grad[r, j] = -p_norm[j] * inv
            if num_w[j] > 0.0:
                grad[r, j] += num_w[j] * np.exp(zr[j] - nshift) * ninv
    return ll, grad


def _constant_hazard_loglik_grad(z, points, widths, times, seg, event):
    n, m = z.shape
    ll = np.empty(n)
    grad = np.empty((n, m))
    for r in range(n):
        zr = z[r]
        k = seg[r]
        s = times[r] - points[k]
        for j in range(m):
            grad[r, j] = 0.0
        cum = 0.0
        for i in range(k):
            d = widths[i] * np.exp(zr[i])
            cum += d
            grad[r, i] = -d
        d = s * np.exp(zr[k])
        cum += d
        grad[r, k] = -d
        if event[r]:
            ll[r] = zr[k] - cum
            grad[r, k] += 1.0
        else:
            ll[r] = -cum
    return ll, grad


def _linear_hazard_loglik_grad(z, points, widths, times, seg, event):
    n, m = z.shape
    ll = np.empty(n)
    grad = np.empty((n, m))
    for r in range(n):
        zr = z[r]
        k = seg[r]
        width = widths[k]
        s = times[r] - points[k]
        for j in range(m):
            grad[r, j] = 0.0
        cum = 0.0
        for i in range(k):
            half = 0.5 * widths[i]
            d0 = half * np.exp(zr[i])
            d1 = half * np.exp(zr[i + 1])
            cum += d0 + d1
            grad[r, i] -= d0
            grad[r, i + 1] -= d1
        # partial segment: (s - s^2/2w) h_k + (s^2/2w) h_{k+1}
        c0 = s - s * s / (2.0 * width)
        c1 = s * s / (2.0 * width)
        d0 = c0 * np.exp(zr[k])
        d1 = c1 * np.exp(zr[k + 1])
        cum += d0 + d1
        grad[r, k] -= d0
        grad[r, k + 1] -= d1
        if event[r]:
            frac = s / width
            if frac <= 0.0:
                log_hazard = zr[k]
                grad[r, k] += 1.0
            elif frac >= 1.0:
                log_hazard = zr[k + 1]
                grad[r, k + 1] += 1.0
            else:
                hshift = zr[k] if zr[k] > zr[k + 1] else zr[k + 1]
                e0 = (1.0 - frac) * np.exp(zr[k] - hshift)
                e1 = frac * np.exp(zr[k + 1] - hshift)
                log_hazard = hshift + np.log(e0 + e1)
                grad[r, k] += e0 / (e0 + e1)
                grad[r, k + 1] += e1 / (e0 + e1)
            ll[r] = log_hazard - cum
        else:
            ll[r] = -cum
    return ll, grad


_PY_KERNELS = {
    "constant-density": _constant_density_loglik_grad,
    "linear-density": _linear_density_loglik_grad,
    "constant-hazard": _constant_hazard_loglik_grad,
    "linear-hazard": _linear_hazard_loglik_grad,
}

if HAS_NUMBA:
    _NUMBA_KERNELS = {
        name: numba.njit(cache=True)(fn) for name, fn in _PY_KERNELS.items()
    }
else:
    _NUMBA_KERNELS = None

_ACTIVE = _NUMBA_KERNELS if USE_NUMBA else _PY_KERNELS


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def available_backends() -> dict:
    """Kernel tables for every importable backend, keyed by backend name."""
    out = {"numpy": _PY_KERNELS}
    if HAS_NUMBA:
        out["numba"] = _NUMBA_KERNELS
    return out


def loglik_grad(kind_value: str, z, points, widths, times, seg, event):
    """Per-record log-likelihood and d(loglik)/d(outputs) for a batch.

    kind_value is a HeadKind.value string; z must be float64 with shape
    (n, m), seg int64 segment indices, event a boolean vector of length n.
    """
    return _ACTIVE[kind_value](z, points, widths, times, seg, event)
