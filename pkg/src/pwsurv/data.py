"""Simulated Weibull survival data, right-censoring, and CSV round-tripping.

Each simulated record draws its own Weibull parameters, scale ~ U(1, 3) and
shape ~ U(0.5, 5); the covariate vector is exactly those two parameters, so a
model that learns the mapping perfectly recovers the generating distribution.
All randomness flows through numpy's PCG64 generator so a seed fully
determines a dataset on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GENERATOR_NAME = "numpy-PCG64"
FORMAT_VERSION = 1


class CsvFormatError(ValueError):
    """Malformed dataset CSV; the message names the offending line."""


@dataclass(frozen=True)
class WeibullParams:
    """Two-parameter Weibull: scale lambda > 0 (time units), shape k > 0."""

    scale: float
    shape: float

    def __post_init__(self):
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not (self.shape > 0.0 and math.isfinite(self.shape)):
            raise ValueError(f"shape must be positive, got {self.shape}")


def weibull_survival(params: WeibullParams, t):
    """S(t) = exp(-(t/scale)^shape); accepts a scalar or an array of times."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0):
        raise ValueError("Weibull survival is defined for t >= 0")
    out = np.exp(-((t / params.scale) ** params.shape))
    return float(out) if out.ndim == 0 else out


def weibull_density(params: WeibullParams, t):
    """Density of the Weibull distribution; f = h * S."""
    return weibull_hazard(params, t) * weibull_survival(params, t)


def weibull_hazard(params: WeibullParams, t):
    """Hazard (shape/scale) * (t/scale)^(shape-1); infinite at 0 for shape < 1."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0):
        raise ValueError("Weibull hazard is defined for t >= 0")
    with np.errstate(divide="ignore"):
        out = (params.shape / params.scale) * (t / params.scale) ** (params.shape - 1.0)
    return float(out) if out.ndim == 0 else out


def sample_weibull(params: WeibullParams, rng) -> float:
    """Inverse-CDF draw: scale * (-ln U)^(1/shape) with U uniform on (0, 1)."""
    u = rng.random()
    if u == 0.0:  # probability 2^-53; keep the draw finite
        u = np.nextafter(0.0, 1.0)
    return params.scale * (-math.log(u)) ** (1.0 / params.shape)


@dataclass(frozen=True)
class CensoringConfig:
    """Right-censoring applied to simulated event times.

    With probability censor_prob a record gets an independent censoring time
    C ~ U(0, censor_max); if C is below the event time the record is censored
    at C. An administrative cutoff, if set, censors every later time at the
    cutoff. The default is no censoring at all.
    """

    censor_prob: float = 0.0
    censor_max: float | None = None
    admin_time: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.censor_prob <= 1.0:
            raise ValueError(f"censor_prob must be in [0, 1], got {self.censor_prob}")
        if self.censor_prob > 0.0 and (self.censor_max is None or self.censor_max <= 0.0):
            raise ValueError("censor_prob > 0 requires a positive censor_max")
        if self.admin_time is not None and self.admin_time <= 0.0:
            raise ValueError(f"admin_time must be positive, got {self.admin_time}")

    @property
    def enabled(self) -> bool:
        return self.censor_prob > 0.0 or self.admin_time is not None


@dataclass(frozen=True)
class SurvivalRecord:
    """One observation: covariates, recorded time, event indicator (False = censored)."""

    covariates: np.ndarray
    time: float
    event: bool


@dataclass
class Dataset:
    """Column-oriented dataset: covariates (n, d), times (n,), events (n,) bool."""

    covariates: np.ndarray
    times: np.ndarray
    events: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.covariates = np.ascontiguousarray(self.covariates, dtype=np.float64)
        self.times = np.ascontiguousarray(self.times, dtype=np.float64)
        self.events = np.ascontiguousarray(self.events, dtype=bool)
        if self.covariates.ndim != 2:
            raise ValueError("covariates must be a 2-d array")
        n = self.covariates.shape[0]
        if self.times.shape != (n,) or self.events.shape != (n,):
            raise ValueError("covariates, times and events lengths disagree")
        if n and (np.any(self.times < 0.0) or not np.all(np.isfinite(self.times))):
            raise ValueError("recorded times must be finite and non-negative")

    def __len__(self) -> int:
        return self.covariates.shape[0]

    @property
    def n_features(self) -> int:
        return self.covariates.shape[1]

    @property
    def max_time(self) -> float:
        if len(self) == 0:
            raise ValueError("empty dataset has no maximum time")
        return float(self.times.max())

    @property
    def records(self) -> list:
        return [
            SurvivalRecord(self.covariates[i].copy(), float(self.times[i]), bool(self.events[i]))
            for i in range(len(self))
        ]

    @classmethod
    def from_records(cls, records, metadata=None) -> "Dataset":
        records = list(records)
        if not records:
            raise ValueError("cannot build a dataset from zero records")
        return cls(
            np.stack([np.asarray(r.covariates, dtype=np.float64) for r in records]),
            np.array([r.time for r in records], dtype=np.float64),
            np.array([r.event for r in records], dtype=bool),
            dict(metadata or {}),
        )


def generate_dataset(
    n: int,
    censoring: CensoringConfig | None = None,
    seed=0,
    scale_range=(1.0, 3.0),
    shape_range=(0.5, 5.0),
) -> Dataset:
    """Simulate n records with per-record Weibull parameters as covariates.

    Draw order (fixed for reproducibility): scales, shapes, event-time
    uniforms, then - only when uniform censoring is enabled - the apply
    uniforms and the censoring times.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"dataset size must be >= 1, got {n}")
    censoring = censoring or CensoringConfig()
    rng = np.random.default_rng(seed)
    scales = rng.uniform(scale_range[0], scale_range[1], n)
    shapes = rng.uniform(shape_range[0], shape_range[1], n)
    u = rng.random(n)
    u[u == 0.0] = np.nextafter(0.0, 1.0)
    times = scales * (-np.log(u)) ** (1.0 / shapes)
    events = np.ones(n, dtype=bool)

    if censoring.censor_prob > 0.0:
        apply = rng.random(n) < censoring.censor_prob
        c = rng.uniform(0.0, censoring.censor_max, n)
        censored = apply & (c < times)
        times = np.where(censored, c, times)
        events &= ~censored
    if censoring.admin_time is not None:
        over = times > censoring.admin_time
        times = np.where(over, censoring.admin_time, times)
        events &= ~over

    metadata = {
        "format_version": FORMAT_VERSION,
        "generator": GENERATOR_NAME,
        "seed": seed if isinstance(seed, int) else repr(seed),
        "n": n,
        "scale_range": tuple(scale_range),
        "shape_range": tuple(shape_range),
        "censor_prob": censoring.censor_prob,
        "censor_max": censoring.censor_max,
        "admin_time": censoring.admin_time,
    }
    return Dataset(np.column_stack([scales, shapes]), times, events, metadata)


# ---------------------------------------------------------------------------
# CSV round-tripping
#
# Header: x0,...,x{d-1},time,event with event in {0,1}. Floats are written
# with repr (shortest exact form), so write + read reproduces values exactly.

def _sidecar_path(path) -> Path:
    return Path(str(path) + ".meta")


def write_csv(dataset: Dataset, path, sidecar: bool = True) -> None:
    path = Path(path)
    d = dataset.n_features
    header = ",".join([f"x{i}" for i in range(d)] + ["time", "event"])
    lines = [header]
    for i in range(len(dataset)):
        cells = [repr(float(v)) for v in dataset.covariates[i]]
        cells.append(repr(float(dataset.times[i])))
        cells.append("1" if dataset.events[i] else "0")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if sidecar and dataset.metadata:
        meta_lines = [f"{key}={dataset.metadata[key]}" for key in sorted(dataset.metadata)]
        _sidecar_path(path).write_text(
            "\n".join(meta_lines) + "\n", encoding="utf-8", newline="\n"
        )


def read_csv(path) -> Dataset:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise CsvFormatError(f"{path}: empty file, expected a header row")
    header = lines[0].split(",")
    if len(header) < 3 or header[-2:] != ["time", "event"]:
        raise CsvFormatError(f"{path}: header must end with 'time,event', got {lines[0]!r}")
    d = len(header) - 2
    expected = [f"x{i}" for i in range(d)]
    if header[:d] != expected:
        raise CsvFormatError(f"{path}: covariate columns must be x0..x{d-1}, got {header[:d]}")

    covs, times, events = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 2:
            raise CsvFormatError(
                f"{path}:{lineno}: expected {d + 2} columns, got {len(cells)}"
            )
        try:
            covs.append([float(c) for c in cells[:d]])
            t = float(cells[d])
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{lineno}: {exc}") from None
        if not math.isfinite(t) or t < 0.0:
            raise CsvFormatError(f"{path}:{lineno}: time must be finite and >= 0, got {cells[d]}")
        flag = cells[d + 1]
        if flag not in ("0", "1"):
            raise CsvFormatError(f"{path}:{lineno}: event must be 0 or 1, got {flag!r}")
        times.append(t)
        events.append(flag == "1")

    metadata = {}
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        for ln in sidecar.read_text(encoding="utf-8").splitlines():
            if "=" in ln:
                key, _, value = ln.partition("=")
                metadata[key] = value
    return Dataset(
        np.array(covs, dtype=np.float64).reshape(len(times), d),
        np.array(times, dtype=np.float64),
        np.array(events, dtype=bool),
        metadata,
    )
