"""Command-line interface: simulate, train, eval, curves, study.

Every flag has a config-file equivalent: pass --config FILE where FILE is a
JSON object keyed by flag name (underscores instead of dashes). Command-line
flags override config values, which override built-in defaults. All commands
are deterministic given their flags and seeds; wall-clock timing is only
written to output files when --timing is passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import heads, training
from .data import (
    CensoringConfig,
    Dataset,
    WeibullParams,
    generate_dataset,
    read_csv,
    weibull_density,
    weibull_hazard,
    weibull_survival,
    write_csv,
)
from .heads import HeadKind

ALL_HEADS = [k.value for k in HeadKind]


class CliError(ValueError):
    """User-facing command error: printed as one line, exit status 1."""


def _parse_number_list(value, n: int, what: str, cast=float) -> list:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip() != ""]
    else:
        parts = list(value)
    try:
        out = [cast(p) for p in parts]
    except (TypeError, ValueError):
        raise CliError(f"{what} must be {n} comma-separated values, got {value!r}") from None
    if len(out) != n:
        raise CliError(f"{what} must have exactly {n} values, got {len(out)}")
    return out


def _parse_int_tuple(value, what: str) -> tuple:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip() != ""]
    else:
        parts = list(value)
    try:
        return tuple(int(p) for p in parts)
    except (TypeError, ValueError):
        raise CliError(f"{what} must be comma-separated integers, got {value!r}") from None


def _parse_heads(value) -> list:
    if isinstance(value, str):
        names = [p.strip() for p in value.split(",") if p.strip() != ""]
    else:
        names = list(value)
    if not names:
        raise CliError("at least one head is required")
    try:
        return [HeadKind.from_string(name) for name in names]
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge CLI flags over config-file values over defaults."""
    config = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config file not found: {path}")
        try:
            config = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(config, dict):
            raise CliError(f"config file {path} must hold a JSON object")
        unknown = sorted(set(config) - set(defaults))
        if unknown:
            raise CliError(f"unknown config keys for this command: {unknown}")
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key)
        if flag is not None:
            out[key] = flag
        elif key in config:
            out[key] = config[key]
        else:
            out[key] = default
    return out


def _require(options: dict, key: str):
    if options[key] is None:
        raise CliError(f"--{key.replace('_', '-')} is required")
    return options[key]


def _censoring_from(options: dict) -> CensoringConfig:
    try:
        return CensoringConfig(
            censor_prob=float(options["censor_prob"]),
            censor_max=None if options["censor_max"] is None else float(options["censor_max"]),
            admin_time=None if options["admin_time"] is None else float(options["admin_time"]),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _write_lines(path, lines) -> None:
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# simulate

SIMULATE_DEFAULTS = {
    "sizes": "1000,300,300",
    "seed": 0,
    "out": None,
    "censor_prob": 0.0,
    "censor_max": None,
    "admin_time": None,
    "scale_range": "1,3",
    "shape_range": "0.5,5",
}


def cmd_simulate(args) -> int:
    options = _resolve(args, SIMULATE_DEFAULTS)
    out_dir = Path(_require(options, "out"))
    sizes = _parse_number_list(options["sizes"], 3, "--sizes", cast=int)
    if any(s < 1 for s in sizes):
        raise CliError(f"--sizes entries must be >= 1, got {sizes}")
    censoring = _censoring_from(options)
    scale_range = _parse_number_list(options["scale_range"], 2, "--scale-range")
    shape_range = _parse_number_list(options["shape_range"], 2, "--shape-range")
    master_seed = int(options["seed"])
    split_seeds = np.random.SeedSequence(master_seed).generate_state(3, dtype=np.uint64)

    out_dir.mkdir(parents=True, exist_ok=True)
    for name, size, split_seed in zip(("train", "val", "test"), sizes, split_seeds):
        dataset = generate_dataset(
            size,
            censoring,
            seed=int(split_seed),
            scale_range=tuple(scale_range),
            shape_range=tuple(shape_range),
        )
        dataset.metadata["split"] = name
        dataset.metadata["master_seed"] = master_seed
        write_csv(dataset, out_dir / f"{name}.csv")
        print(f"wrote {out_dir / (name + '.csv')} ({size} records)")
    return 0


# ---------------------------------------------------------------------------
# train

TRAIN_DEFAULTS = {
    "train": None,
    "val": None,
    "head": None,
    "grid_points": 5,
    "epochs": 200,
    "lr": None,
    "sweep": None,
    "sweep_count": 20,
    "lr_min": 1e-4,
    "lr_max": 1e-1,
    "t_max": None,
    "hidden": "32,32",
    "activation": "relu",
    "batch_size": None,
    "seed": 0,
    "timing": None,
    "out": None,
}


def _history_csv_lines(rates_histories) -> list:
    lines = ["learning_rate,epoch,train_loss,val_loss"]
    for lr, history in rates_histories:
        if history is None:
            continue
        for h in history:
            lines.append(f"{lr!r},{h.epoch},{h.train_loss!r},{h.val_loss!r}")
    return lines


def cmd_train(args) -> int:
    options = _resolve(args, TRAIN_DEFAULTS)
    train_path = Path(_require(options, "train"))
    val_path = Path(_require(options, "val"))
    out_dir = Path(_require(options, "out"))
    head = HeadKind.from_string(_require(options, "head"))
    sweep = bool(options["sweep"])
    lr = options["lr"]
    if sweep and lr is not None:
        raise CliError("--lr and --sweep are mutually exclusive")
    if not sweep and lr is None:
        raise CliError("either --lr or --sweep is required")

    train_set = read_csv(train_path)
    val_set = read_csv(val_path)
    try:
        config = training.TrainConfig(
            head=head,
            grid_points=int(options["grid_points"]),
            t_max=None if options["t_max"] is None else float(options["t_max"]),
            hidden_layers=_parse_int_tuple(options["hidden"], "--hidden"),
            activation=str(options["activation"]),
            epochs=int(options["epochs"]),
            learning_rate=0.0 if lr is None else float(lr),
            batch_size=None if options["batch_size"] is None else int(options["batch_size"]),
            seed=int(options["seed"]),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None

    if sweep:
        result = training.lr_sweep(
            config,
            train_set,
            val_set,
            lr_min=float(options["lr_min"]),
            lr_max=float(options["lr_max"]),
            count=int(options["sweep_count"]),
        )
        model = result.model
        history_pairs = list(zip(result.learning_rates, result.histories))
        print(f"selected learning rate {result.selected_lr:g}")
    else:
        model = training.train(config, train_set, val_set)
        history_pairs = [(config.learning_rate, model.history)]

    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.json"
    training.save_model(model, model_path, include_timing=bool(options["timing"]))
    _write_lines(out_dir / "history.csv", _history_csv_lines(history_pairs))
    print(
        f"wrote {model_path} (best epoch {model.best_epoch}, "
        f"val loss {model.best_val_loss:.4g})"
    )
    return 0


# ---------------------------------------------------------------------------
# eval

EVAL_DEFAULTS = {"model": None, "data": None}


def cmd_eval(args) -> int:
    options = _resolve(args, EVAL_DEFAULTS)
    model = training.load_model(Path(_require(options, "model")))
    dataset = read_csv(Path(_require(options, "data")))
    loss = training.evaluate(model, dataset)
    print(f"loss={loss:.4g} n={len(dataset)}")
    return 0


# ---------------------------------------------------------------------------
# curves

CURVES_DEFAULTS = {
    "model": None,
    "x": None,
    "resolution": 201,
    "truth": None,
    "out": None,
}


def cmd_curves(args) -> int:
    options = _resolve(args, CURVES_DEFAULTS)
    model = training.load_model(Path(_require(options, "model")))
    x = np.array(
        _parse_number_list(_require(options, "x"), model.input_dim, "--x"),
        dtype=np.float64,
    )
    resolution = int(options["resolution"])
    if resolution < 2:
        raise CliError(f"--resolution must be >= 2, got {resolution}")
    truth = None
    if options["truth"] is not None:
        scale, shape = _parse_number_list(options["truth"], 2, "--truth")
        truth = WeibullParams(scale=scale, shape=shape)

    outputs = model.predict_outputs(x)
    times = np.linspace(0.0, model.grid.t_max, resolution)
    header = "t,survival,density,hazard,cumulative_hazard"
    if truth is not None:
        header += ",truth_survival,truth_density,truth_hazard"
    lines = [header]
    for t in times:
        ev = heads.evaluate(model.head, outputs, model.grid, float(t))
        cells = [
            repr(float(t)),
            repr(ev.survival),
            repr(ev.density),
            repr(ev.hazard),
            repr(ev.cumulative_hazard),
        ]
        if truth is not None:
            cells.append(repr(weibull_survival(truth, float(t))))
            cells.append(repr(weibull_density(truth, float(t))))
            cells.append(repr(weibull_hazard(truth, float(t))))
        lines.append(",".join(cells))

    if options["out"] is None:
        print("\n".join(lines))
    else:
        _write_lines(options["out"], lines)
        print(f"wrote {options['out']} ({resolution} rows)")
    return 0


# ---------------------------------------------------------------------------
# study

STUDY_DEFAULTS = {
    "reps": 100,
    "seed": 0,
    "heads": ",".join(ALL_HEADS),
    "out": "report.csv",
    "jobs": 1,
    "timing": None,
    "sizes": "1000,300,300",
    "censor_prob": 0.0,
    "censor_max": None,
    "admin_time": None,
    "grid_points": 5,
    "epochs": 200,
    "hidden": "32,32",
    "activation": "relu",
    "sweep_count": 20,
    "lr_min": 1e-4,
    "lr_max": 1e-1,
}


def cmd_study(args) -> int:
    options = _resolve(args, STUDY_DEFAULTS)
    head_kinds = _parse_heads(options["heads"])
    reps = int(options["reps"])
    jobs = int(options["jobs"])
    timing = bool(options["timing"])
    sizes = _parse_number_list(options["sizes"], 3, "--sizes", cast=int)
    try:
        settings = training.StudySettings(
            sizes=tuple(sizes),
            censoring=_censoring_from(options),
            grid_points=int(options["grid_points"]),
            hidden_layers=_parse_int_tuple(options["hidden"], "--hidden"),
            activation=str(options["activation"]),
            epochs=int(options["epochs"]),
            sweep_count=int(options["sweep_count"]),
            lr_min=float(options["lr_min"]),
            lr_max=float(options["lr_max"]),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None

    lines = ["model,mean_loss,sd_loss,mean_time_s,sd_time_s,failures,caveat"]
    for kind in head_kinds:
        result = training.replication_study(
            kind, n_reps=reps, master_seed=int(options["seed"]), settings=settings, jobs=jobs
        )
        mean_time = repr(result.mean_seconds) if timing else ""
        sd_time = repr(result.sd_seconds) if timing else ""
        caveat = "single-sample-sd" if result.single_sample else ""
        lines.append(
            f"{kind.value},{result.mean_loss!r},{result.sd_loss!r},"
            f"{mean_time},{sd_time},{result.n_failed},{caveat}"
        )
        print(
            f"{kind.value}: mean test loss {result.mean_loss:.4g} "
            f"(sd {result.sd_loss:.4g}, {result.n_failed} failed)"
        )
    _write_lines(options["out"], lines)
    print(f"wrote {options['out']}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwsurv",
        description="Piecewise neural survival models: simulate, train, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.set_defaults(func=func)
        return p

    p = add("simulate", cmd_simulate, "write simulated train/val/test CSV datasets")
    p.add_argument("--sizes", help="train,val,test record counts (default 1000,300,300)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--censor-prob", type=float, dest="censor_prob")
    p.add_argument("--censor-max", type=float, dest="censor_max")
    p.add_argument("--admin-time", type=float, dest="admin_time")
    p.add_argument("--scale-range", dest="scale_range")
    p.add_argument("--shape-range", dest="shape_range")

    p = add("train", cmd_train, "train one model (fixed rate or sweep)")
    p.add_argument("--train", help="training CSV")
    p.add_argument("--val", help="validation CSV")
    p.add_argument("--head", choices=ALL_HEADS)
    p.add_argument("--grid-points", type=int, dest="grid_points")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--sweep", action="store_true", default=None)
    p.add_argument("--sweep-count", type=int, dest="sweep_count")
    p.add_argument("--lr-min", type=float, dest="lr_min")
    p.add_argument("--lr-max", type=float, dest="lr_max")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--hidden", help="hidden layer widths, e.g. 32,32")
    p.add_argument("--activation", choices=("relu", "tanh"))
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--seed", type=int)
    p.add_argument("--timing", action="store_true", default=None,
                   help="include wall-clock seconds in the model file")
    p.add_argument("--out", help="output directory for model.json and history.csv")

    p = add("eval", cmd_eval, "print mean test loss of a model on a dataset")
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--data", help="dataset CSV")

    p = add("curves", cmd_curves, "emit survival/density/hazard curves as CSV")
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--x", help="covariate vector, e.g. 2,3")
    p.add_argument("--resolution", type=int)
    p.add_argument("--truth", help="scale,shape of a reference Weibull to tabulate")
    p.add_argument("--out", help="output CSV (default: stdout)")

    p = add("study", cmd_study, "replication study over the four heads")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--heads", help="comma-separated head names (default: all four)")
    p.add_argument("--out", help="report CSV path (default report.csv)")
    p.add_argument("--jobs", type=int, help="parallel replication workers")
    p.add_argument("--timing", action="store_true", default=None,
                   help="include wall-clock timing columns in the report")
    p.add_argument("--sizes", help="train,val,test record counts")
    p.add_argument("--censor-prob", type=float, dest="censor_prob")
    p.add_argument("--censor-max", type=float, dest="censor_max")
    p.add_argument("--admin-time", type=float, dest="admin_time")
    p.add_argument("--grid-points", type=int, dest="grid_points")
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden")
    p.add_argument("--activation", choices=("relu", "tanh"))
    p.add_argument("--sweep-count", type=int, dest="sweep_count")
    p.add_argument("--lr-min", type=float, dest="lr_min")
    p.add_argument("--lr-max", type=float, dest="lr_max")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
