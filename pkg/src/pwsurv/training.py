"""Training harness: single runs with validation checkpointing, learning-rate
sweeps, and the multi-replication comparison study.

A single run does full-batch gradient steps (Adam) for a fixed number of
epochs, evaluates train and validation loss after every step, and returns the
parameters from the epoch with the lowest validation loss (earliest epoch on
ties). The sweep retrains from the same initialization for each learning rate
and keeps the best run; the study repeats simulate/sweep/test over fresh
datasets and aggregates test losses and training times.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import loss as loss_mod
from . import network
from .data import CensoringConfig, Dataset, GENERATOR_NAME, generate_dataset
from .grid import TimeGrid, make_uniform_grid
from .heads import HeadKind, output_dim

MODEL_FORMAT_VERSION = 1
T_MAX_MARGIN = 1.001


class TrainingDivergedError(RuntimeError):
    """Raised when a run hits a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int, learning_rate: float):
        super().__init__(message)
        self.epoch = epoch
        self.learning_rate = learning_rate


@dataclass(frozen=True)
class TrainConfig:
    head: HeadKind
    grid_points: int = 5
    t_max: float | None = None  # None: max observed time of the given datasets * margin
    t_max_margin: float = T_MAX_MARGIN
    hidden_layers: tuple = (32, 32)
    activation: str = "relu"
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int | None = None  # None: full batch
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 when set")

    def to_dict(self) -> dict:
        return {
            "head": self.head.value,
            "grid_points": self.grid_points,
            "t_max": self.t_max,
            "t_max_margin": self.t_max_margin,
            "hidden_layers": list(self.hidden_layers),
            "activation": self.activation,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["head"] = HeadKind.from_string(d["head"])
        d["hidden_layers"] = tuple(d["hidden_layers"])
        return cls(**d)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainedModel:
    head: HeadKind
    grid: TimeGrid
    params: network.NetworkParams
    history: list
    best_epoch: int
    best_val_loss: float
    config: dict
    train_seconds: float
    metadata: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.params.input_dim

    def predict_outputs(self, x) -> np.ndarray:
        outputs, _ = network.forward(self.params, np.asarray(x, dtype=np.float64))
        return outputs


def resolve_t_max(config: TrainConfig, *datasets) -> float:
    if config.t_max is not None:
        if config.t_max <= 0.0:
            raise ValueError(f"t_max must be positive, got {config.t_max}")
        return float(config.t_max)
    observed = max(ds.max_time for ds in datasets if ds is not None and len(ds))
    if observed <= 0.0:
        # all recorded times are zero; any positive horizon works
        return 1.0
    return observed * config.t_max_margin


def train(config: TrainConfig, train_set: Dataset, val_set: Dataset) -> TrainedModel:
    """Train one model; returns the parameters of the best-validation epoch."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("training and validation sets must be non-empty")
    if train_set.n_features != val_set.n_features:
        raise ValueError(
            f"covariate dimension mismatch: train {train_set.n_features}, "
            f"val {val_set.n_features}"
        )

    t_max = resolve_t_max(config, train_set, val_set)
    grid = make_uniform_grid(t_max, config.grid_points)
    out_dim = output_dim(config.head, grid.n_segments)
    net_config = network.NetworkConfig(
        input_dim=train_set.n_features,
        hidden_layers=config.hidden_layers,
        output_dim=out_dim,
        activation=config.activation,
        seed=config.seed,
    )

    start = time.perf_counter()
    params = network.init_params(net_config)
    optimizer = network.init_optimizer(params, config.learning_rate)

    n = len(train_set)
    x_train, t_train, e_train = train_set.covariates, train_set.times, train_set.events
    x_val, t_val, e_val = val_set.covariates, val_set.times, val_set.events
    seg_train = grid.segment_indices(t_train)
    seg_val = grid.segment_indices(t_val)

    batch = n if config.batch_size is None else min(config.batch_size, n)
    shuffle_rng = (
        np.random.default_rng(np.random.SeedSequence((config.seed, 1))) if batch < n else None
    )

    def mean_loss(x, t, e, seg):
        outputs, _ = network.forward(params, x)
        ll, _ = loss_mod.batch_loglik_grad(config.head, outputs, grid, t, e, seg)
        return -float(ll.mean())

    history = []
    best_epoch = 0
    best_val = np.inf
    best_params = None
    for epoch in range(1, config.epochs + 1):
        order = np.arange(n) if shuffle_rng is None else shuffle_rng.permutation(n)
        for start_idx in range(0, n, batch):
            idx = order[start_idx : start_idx + batch]
            outputs, cache = network.forward(params, x_train[idx])
            ll, grad_ll = loss_mod.batch_loglik_grad(
                config.head, outputs, grid, t_train[idx], e_train[idx], seg_train[idx]
            )
            step_loss = -float(ll.mean())
            if not np.isfinite(step_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} "
                    f"(learning_rate={config.learning_rate:g})",
                    epoch,
                    config.learning_rate,
                )
            grads = network.backward(params, cache, -grad_ll / idx.size)
            try:
                network.optimizer_step(params, grads, optimizer)
            except FloatingPointError as exc:
                raise TrainingDivergedError(
                    f"{exc} at epoch {epoch} (learning_rate={config.learning_rate:g})",
                    epoch,
                    config.learning_rate,
                ) from exc

        train_loss = mean_loss(x_train, t_train, e_train, seg_train)
        val_loss = mean_loss(x_val, t_val, e_val, seg_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch} "
                f"(learning_rate={config.learning_rate:g})",
                epoch,
                config.learning_rate,
            )
        history.append(EpochStats(epoch, train_loss, val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = params.copy()

    seconds = time.perf_counter() - start
    return TrainedModel(
        head=config.head,
        grid=grid,
        params=best_params,
        history=history,
        best_epoch=best_epoch,
        best_val_loss=best_val,
        config=config.to_dict(),
        train_seconds=seconds,
        metadata={
            "initialization": "uniform-fan-in",
            "rng": GENERATOR_NAME,
            "loss": "negative mean log-likelihood per record",
        },
    )


def evaluate(model: TrainedModel, dataset: Dataset) -> float:
    """Mean negative log-likelihood of a dataset under a trained model."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if dataset.n_features != model.input_dim:
        raise ValueError(
            f"covariate dimension mismatch: model expects {model.input_dim}, "
            f"dataset has {dataset.n_features}"
        )
    over = dataset.times > model.grid.t_max
    if np.any(over):
        rows = np.flatnonzero(over)[:10]
        raise ValueError(
            f"{int(over.sum())} record(s) exceed the model horizon "
            f"t_max={model.grid.t_max:g}: rows {rows.tolist()} "
            f"(times {dataset.times[rows].tolist()})"
        )
    return loss_mod.dataset_loss(model.head, model.params, model.grid, dataset)


# ---------------------------------------------------------------------------
# learning-rate sweep

@dataclass
class SweepResult:
    learning_rates: list
    val_losses: list  # best-checkpoint validation loss per rate, None if the run aborted
    selected_lr: float
    model: TrainedModel
    failures: list = field(default_factory=list)  # (learning_rate, message)
    histories: list = field(default_factory=list)  # per-rate epoch history, None if aborted


def sweep_learning_rates(lr_min: float, lr_max: float, count: int) -> np.ndarray:
    if count < 2:
        raise ValueError("sweep needs at least 2 learning rates")
    if not 0.0 < lr_min < lr_max:
        raise ValueError(f"need 0 < lr_min < lr_max, got {lr_min}, {lr_max}")
    return np.geomspace(lr_min, lr_max, count)


def lr_sweep(
    base_config: TrainConfig,
    train_set: Dataset,
    val_set: Dataset,
    lr_min: float = 1e-4,
    lr_max: float = 1e-1,
    count: int = 20,
) -> SweepResult:
    """Retrain from one shared initialization per learning rate, keep the best.

    Rates are geometric and include both endpoints; the winner has the lowest
    checkpointed validation loss, with ties going to the smaller rate. Aborted
    runs are skipped and recorded; the sweep fails only if every run aborts.
    """
    rates = sweep_learning_rates(lr_min, lr_max, count)
    val_losses = []
    histories = []
    failures = []
    best = None
    for lr in rates:
        config = replace(base_config, learning_rate=float(lr))
        try:
            model = train(config, train_set, val_set)
        except TrainingDivergedError as exc:
            val_losses.append(None)
            histories.append(None)
            failures.append((float(lr), str(exc)))
            continue
        val_losses.append(model.best_val_loss)
        histories.append(model.history)
        if best is None or model.best_val_loss < best.best_val_loss:
            best = model
    if best is None:
        raise TrainingDivergedError(
            f"all {count} sweep runs diverged (rates {lr_min:g}..{lr_max:g})",
            epoch=0,
            learning_rate=float("nan"),
        )
    best.metadata["selected_learning_rate"] = best.config["learning_rate"]
    return SweepResult(
        learning_rates=[float(r) for r in rates],
        val_losses=val_losses,
        selected_lr=best.config["learning_rate"],
        model=best,
        failures=failures,
        histories=histories,
    )


# ---------------------------------------------------------------------------
# replication study

@dataclass(frozen=True)
class StudySettings:
    """Everything one replication needs besides its index and the master seed."""

    sizes: tuple = (1000, 300, 300)
    censoring: CensoringConfig = CensoringConfig()
    grid_points: int = 5
    hidden_layers: tuple = (32, 32)
    activation: str = "relu"
    epochs: int = 200
    sweep_count: int = 20
    lr_min: float = 1e-4
    lr_max: float = 1e-1

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if len(self.sizes) != 3 or any(s < 1 for s in self.sizes):
            raise ValueError("sizes must be three positive integers (train, val, test)")


@dataclass
class StudyResult:
    head: HeadKind
    n_reps: int
    rep_losses: list  # per replication; None where the replication failed
    rep_seconds: list
    failures: list  # (replication index, message)

    def _ok(self, values):
        return np.array([v for v in values if v is not None], dtype=np.float64)

    @property
    def n_failed(self) -> int:
        return len(self.failures)

    @property
    def single_sample(self) -> bool:
        return len(self._ok(self.rep_losses)) < 2

    @property
    def mean_loss(self) -> float:
        return float(self._ok(self.rep_losses).mean())

    @property
    def sd_loss(self) -> float:
        ok = self._ok(self.rep_losses)
        return 0.0 if ok.size < 2 else float(ok.std(ddof=1))

    @property
    def mean_seconds(self) -> float:
        return float(self._ok(self.rep_seconds).mean())

    @property
    def sd_seconds(self) -> float:
        ok = self._ok(self.rep_seconds)
        return 0.0 if ok.size < 2 else float(ok.std(ddof=1))


def replication_seeds(master_seed: int, rep: int) -> list:
    """Four derived integer seeds (train, val, test, network init) for one replication."""
    state = np.random.SeedSequence((int(master_seed), int(rep))).generate_state(4, dtype=np.uint64)
    return [int(s) for s in state]


def run_replication(head: HeadKind, rep: int, master_seed: int, settings: StudySettings):
    """One replication: fresh datasets, sweep, test evaluation.

    Returns (test_loss, train_seconds of the selected single run).
    """
    train_seed, val_seed, test_seed, net_seed = replication_seeds(master_seed, rep)
    train_set = generate_dataset(settings.sizes[0], settings.censoring, seed=train_seed)
    val_set = generate_dataset(settings.sizes[1], settings.censoring, seed=val_seed)
    test_set = generate_dataset(settings.sizes[2], settings.censoring, seed=test_seed)
    # the horizon must cover every split, including test times seen only at
    # evaluation, so it is derived from all three
    t_max = max(ds.max_time for ds in (train_set, val_set, test_set)) * T_MAX_MARGIN
    config = TrainConfig(
        head=head,
        grid_points=settings.grid_points,
        t_max=t_max,
        hidden_layers=settings.hidden_layers,
        activation=settings.activation,
        epochs=settings.epochs,
        seed=net_seed,
    )
    sweep = lr_sweep(
        config,
        train_set,
        val_set,
        lr_min=settings.lr_min,
        lr_max=settings.lr_max,
        count=settings.sweep_count,
    )
    return evaluate(sweep.model, test_set), sweep.model.train_seconds


def _replication_task(args):
    head_value, rep, master_seed, settings = args
    try:
        test_loss, seconds = run_replication(
            HeadKind.from_string(head_value), rep, master_seed, settings
        )
        return rep, test_loss, seconds, None
    except Exception as exc:  # noqa: BLE001 - a failed replication must not kill the study
        return rep, None, None, f"{type(exc).__name__}: {exc}"


def replication_study(
    head: HeadKind,
    n_reps: int = 100,
    master_seed: int = 0,
    settings: StudySettings | None = None,
    jobs: int = 1,
) -> StudyResult:
    """Repeat simulate/sweep/evaluate n_reps times and aggregate test losses.

    Replications are independent and seeded by (master_seed, replication
    index), so results do not depend on the number of worker processes.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    settings = settings or StudySettings()
    tasks = [(head.value, rep, master_seed, settings) for rep in range(n_reps)]
    results = [None] * n_reps
    if jobs > 1 and n_reps > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rep, loss, seconds, err in pool.map(_replication_task, tasks):
                results[rep] = (loss, seconds, err)
    else:
        for task in tasks:
            rep, loss, seconds, err = _replication_task(task)
            results[rep] = (loss, seconds, err)

    rep_losses = [r[0] for r in results]
    rep_seconds = [r[1] for r in results]
    failures = [(rep, r[2]) for rep, r in enumerate(results) if r[2] is not None]
    if len(failures) == n_reps:
        raise RuntimeError(
            f"all {n_reps} replications failed; first error: {failures[0][1]}"
        )
    return StudyResult(head, n_reps, rep_losses, rep_seconds, failures)


# ---------------------------------------------------------------------------
# model file I/O (versioned JSON, human-diffable)

def save_model(model: TrainedModel, path, include_timing: bool = True) -> None:
    """Write a model as self-describing JSON.

    With include_timing=False the wall-clock field is written as null so that
    repeated runs with identical seeds produce byte-identical files.
    """
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "head": model.head.value,
        "grid_points": [float(p) for p in model.grid.points],
        "network": {
            "input_dim": model.params.input_dim,
            "activation": model.params.activation,
            "layers": [
                {
                    "weights_shape": list(w.shape),
                    "weights": w.ravel().tolist(),
                    "bias": b.tolist(),
                }
                for w, b in zip(model.params.weights, model.params.biases)
            ],
        },
        "history": [
            {"epoch": h.epoch, "train_loss": h.train_loss, "val_loss": h.val_loss}
            for h in model.history
        ],
        "best_epoch": model.best_epoch,
        "best_val_loss": model.best_val_loss,
        "config": model.config,
        "train_seconds": model.train_seconds if include_timing else None,
        "metadata": model.metadata,
    }
    Path(path).write_text(
        json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_model(path) -> TrainedModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    net = payload["network"]
    weights, biases = [], []
    for layer in net["layers"]:
        shape = tuple(layer["weights_shape"])
        weights.append(np.array(layer["weights"], dtype=np.float64).reshape(shape))
        biases.append(np.array(layer["bias"], dtype=np.float64))
    params = network.NetworkParams(weights, biases, net["activation"])
    history = [
        EpochStats(h["epoch"], h["train_loss"], h["val_loss"]) for h in payload["history"]
    ]
    seconds = payload.get("train_seconds")
    return TrainedModel(
        head=HeadKind.from_string(payload["head"]),
        grid=TimeGrid(np.array(payload["grid_points"], dtype=np.float64)),
        params=params,
        history=history,
        best_epoch=payload["best_epoch"],
        best_val_loss=payload["best_val_loss"],
        config=payload["config"],
        train_seconds=float("nan") if seconds is None else seconds,
        metadata=payload.get("metadata", {}),
    )
