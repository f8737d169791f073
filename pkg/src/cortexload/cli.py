"""Command-line entry point: synth, preprocess, train, evaluate, report.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines (``#`` starts a comment), then ``--set key=value``
pairs, then the dedicated flags. Unknown keys are rejected. The effective
settings are echoed into every output directory and report.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .convnext_eeg import ConvNeXtConfig, ConvNeXtEEG, load_checkpoint, save_checkpoint
from .errors import (ConfigurationError, CortexloadError, ParseError, PipelineError,
                     TrainingError)
from .sigproc import (FilterSpec, PreprocessConfig, SynthConfig, Task, load_epoch_set,
                      load_stew, preprocess, save_epoch_set, synth_dataset, write_stew)
from .train_eval import (OptimizerConfig, TrainConfig, cross_validate, evaluate, holdout,
                         read_report, report_dict, write_report)
from .train_eval.reports import box_rows, comparison_table, render_box_svg, write_box_csv

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_PIPELINE, EXIT_TRAINING, EXIT_IO, EXIT_OTHER = (
    0, 2, 3, 4, 5, 6, 1)

# key: (default, description)
SETTINGS = {
    "seed": (0, "master seed for every random stream"),
    "task": ("binary", "binary (rest vs task) or ternary (binned task rating)"),
    "out": ("cortexload-out", "output directory"),
    # synth
    "subjects": (6, "synthetic subjects"),
    "classes": (3, "synthetic workload classes"),
    "duration_s": (150.0, "seconds per synthetic recording"),
    "snr": (SynthConfig.snr, "synthetic alpha/noise amplitude ratio at rest"),
    "level_ratio": (SynthConfig.level_ratio, "alpha amplitude factor per workload level"),
    # preprocess
    "filter_low_hz": (0.5, "band-pass lower edge"),
    "filter_high_hz": (45.0, "band-pass upper edge"),
    "filter_order": (4, "Butterworth prototype order"),
    "filter": ("on", "on or off"),
    "ica": ("off", "ICA artifact rejection, on or off"),
    "kurtosis_threshold": (8.0, "reject ICA components with excess kurtosis above this"),
    "binning": ("3 6", "inclusive upper rating edges of the low and medium classes"),
    "window_len": (128, "samples per window"),
    "hop": (64, "samples between window starts"),
    # train
    "split": ("holdout", "holdout (70:15:15) or cv (stratified k-fold)"),
    "folds": (5, "k for cv mode"),
    "val_fraction": (0.15, "validation share carved from each cv training fold"),
    "split_ratios": ("70 15 15", "train/val/test percentages for holdout mode"),
    "epochs": (100, "training epochs"),
    "batch_size": (16, "mini-batch size"),
    "lr": (1e-4, "base learning rate"),
    "optimizer": ("adamw", "adamw or adam"),
    "weight_decay": (0.05, "decoupled weight decay (adamw)"),
    "beta1": (0.9, "first-moment decay"),
    "beta2": (0.999, "second-moment decay"),
    "adam_eps": (1e-8, "optimizer stability constant"),
    "schedule": ("constant", "constant or cosine (with warmup_epochs linear warmup)"),
    "warmup_epochs": (0, "warmup length for the cosine schedule"),
    "noise_std": (0.0, "std of Gaussian noise added to training windows; 0 disables"),
    "patience": (0, "early-stopping patience in epochs, 0 = off"),
    "checkpoint_every": (0, "save a checkpoint every n epochs, 0 = off"),
    "ci_method": ("t", "t or normal"),
    "stochastic_depth": (0.1, "maximum stochastic-depth rate"),
    "layer_scale_init": (1e-6, "initial layer-scale value"),
    # evaluate
    "checkpoint": ("", "checkpoint directory for evaluate"),
}


def _coerce(key, raw):
    default = SETTINGS[key][0]
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r} as {type(default).__name__}")
    return raw


def read_config_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}", path=path) from exc
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", path=path, line=lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SETTINGS:
            raise ParseError(f"unknown key {key!r}", path=path, line=lineno)
        try:
            values[key] = _coerce(key, raw)
        except ConfigurationError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
    return values


def write_config_file(path, settings):
    lines = [f"{k} = {v}" for k, v in settings.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def resolve_settings(args):
    settings = {k: v[0] for k, v in SETTINGS.items()}
    if args.config:
        settings.update(read_config_file(args.config))
    for pair in args.set or []:
        if "=" not in pair:
            raise ConfigurationError(f"--set expects key=value, got {pair!r}")
        key, raw = (s.strip() for s in pair.split("=", 1))
        if key not in SETTINGS:
            raise ConfigurationError(f"unknown key {key!r}")
        settings[key] = _coerce(key, raw)
    flags = {"seed": args.seed, "task": args.task, "split": args.split, "out": args.out,
             "ica": args.ica, "epochs": args.epochs, "batch_size": args.batch_size,
             "lr": args.lr}
    settings.update({k: v for k, v in flags.items() if v is not None})
    if settings["task"] not in ("binary", "ternary"):
        raise ConfigurationError(f"task must be binary or ternary, got {settings['task']!r}")
    if settings["split"] not in ("holdout", "cv"):
        raise ConfigurationError(f"split must be holdout or cv, got {settings['split']!r}")
    for key in ("ica", "filter"):
        if settings[key] not in ("on", "off"):
            raise ConfigurationError(f"{key} must be on or off, got {settings[key]!r}")
    return settings


def _ints(text):
    return tuple(int(v) for v in str(text).split())


def preprocess_config(s):
    spec = None
    if s["filter"] == "on":
        spec = FilterSpec(s["filter_low_hz"], s["filter_high_hz"], s["filter_order"])
    return PreprocessConfig(task=Task(s["task"]), filter=spec, ica=s["ica"] == "on",
                            kurtosis_threshold=s["kurtosis_threshold"],
                            binning=_ints(s["binning"]), window_len=s["window_len"],
                            hop=s["hop"], seed=s["seed"])


def training_configs(s, out, class_count):
    model = ConvNeXtConfig(num_classes=class_count,
                           stochastic_depth_max=s["stochastic_depth"],
                           layer_scale_init=s["layer_scale_init"])
    train = TrainConfig(epochs=s["epochs"], batch_size=s["batch_size"], lr=s["lr"],
                        seed=s["seed"], patience=s["patience"] or None,
                        checkpoint_every=s["checkpoint_every"],
                        checkpoint_dir=str(out / "checkpoints") if s["checkpoint_every"] else None,
                        schedule=s["schedule"], warmup_epochs=s["warmup_epochs"],
                        noise_std=s["noise_std"])
    opt = OptimizerConfig(kind=s["optimizer"], lr=s["lr"], beta1=s["beta1"], beta2=s["beta2"],
                          eps=s["adam_eps"],
                          weight_decay=s["weight_decay"] if s["optimizer"] == "adamw" else 0.0)
    return model, train, opt


def _task_of(epoch_set):
    return "binary" if epoch_set.class_count == 2 else "ternary"


def _histogram(labels, class_count):
    return " ".join(str(c) for c in np.bincount(labels, minlength=class_count))


# commands

def cmd_synth(s, args):
    out = Path(s["out"])
    config = SynthConfig(subjects=s["subjects"], classes=s["classes"],
                         duration_s=s["duration_s"], snr=s["snr"], level_ratio=s["level_ratio"])
    recordings = synth_dataset(config, s["seed"])
    write_stew(recordings, out)
    write_config_file(out / "run_config.txt", s)
    print(f"wrote {len(recordings)} recordings to {out}")
    tasks = [r for r in recordings if r.condition.value == "task"]
    print(f"rest recordings: {len(recordings) - len(tasks)}")
    for cls in range(config.classes):
        count = sum(1 for r in tasks if (r.subject_id - 1) % config.classes == cls)
        print(f"task class {cls}: {count} recordings")
    return out


def cmd_preprocess(s, args):
    out = Path(s["out"])
    recordings = load_stew(args.input)
    epochs, log = preprocess(recordings, preprocess_config(s))
    extra = {f"config.{k}": v for k, v in s.items()}
    extra["rejected_components"] = json.dumps(log.rejected_components, sort_keys=True)
    save_epoch_set(epochs, out, extra)
    print(f"windows: {len(epochs)}")
    print(f"class histogram: {_histogram(epochs.labels, epochs.class_count)}")
    return out


def cmd_train(s, args):
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    data = load_epoch_set(args.data)
    # the processed dataset fixes the task
    s = {**s, "task": _task_of(data)}
    model_cfg, train_cfg, opt_cfg = training_configs(s, out, data.class_count)
    started = time.perf_counter()
    if s["split"] == "cv":
        report = cross_validate(data, s["folds"], model_cfg, train_cfg, opt_cfg, s["seed"],
                                s["val_fraction"], ci_method=s["ci_method"])
    else:
        report = holdout(data, _ints(s["split_ratios"]), model_cfg, train_cfg, opt_cfg,
                         s["seed"])
    for fold in report.folds:
        suffix = "" if report.mode == "holdout" else f"_fold{fold.index}"
        fold.history.write_csv(out / f"history{suffix}.csv")
        model = ConvNeXtEEG(model_cfg, params={})
        model.load_state(fold.state)
        save_checkpoint(out / f"checkpoint{suffix}", model_cfg, model.params,
                        {"fold": fold.index, "seed": s["seed"]})
    data_dict = report_dict(report, s["task"], data.class_count, s)
    write_report(out / "report.json", data_dict)
    write_config_file(out / "run_config.txt", s)
    (out / "timings.json").write_text(json.dumps(
        {"wall_clock_s": time.perf_counter() - started}, indent=2) + "\n")
    for fold in report.folds:
        print(f"fold {fold.index}: accuracy {100 * fold.accuracy:.2f}%")
    ci = report.ci_half_width
    print(f"mean accuracy {100 * report.mean:.2f}%"
          + (f" ± {100 * ci:.2f}" if ci is not None else ""))
    return out


def cmd_evaluate(s, args):
    if not s["checkpoint"]:
        raise ConfigurationError("evaluate needs checkpoint = <dir> (or --set checkpoint=...)")
    config, params = load_checkpoint(s["checkpoint"])
    data = load_epoch_set(args.data)
    s = {**s, "task": _task_of(data)}
    acc, confusion = evaluate(ConvNeXtEEG(config, params), None, data)
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_report(out / "evaluation.json", {"accuracy": acc, "confusion": confusion.tolist(),
                                           "windows": len(data), "config": s})
    print(f"accuracy {100 * acc:.2f}% on {len(data)} windows")
    for row in confusion:
        print(" ".join(f"{v:6d}" for v in row))
    return out


def cmd_report(s, args):
    reports = [read_report(p) for p in args.reports]
    names = [Path(p).parent.name or Path(p).stem for p in args.reports]
    print(comparison_table(reports, names))
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = box_rows(reports, names)
    write_box_csv(out / "boxplot.csv", rows)
    (out / "boxplot.svg").write_text(render_box_svg(rows))
    return out


COMMANDS = {"synth": cmd_synth, "preprocess": cmd_preprocess, "train": cmd_train,
            "evaluate": cmd_evaluate, "report": cmd_report}


def build_parser():
    parser = argparse.ArgumentParser(prog="cortexload",
                                     description="EEG mental-workload pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one setting (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--task", choices=("binary", "ternary"))
    common.add_argument("--split", choices=("holdout", "cv"))
    common.add_argument("--out")
    common.add_argument("--ica", choices=("on", "off"))
    common.add_argument("--epochs", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--lr", type=float)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic STEW-layout dataset")
    p = sub.add_parser("preprocess", parents=[common], help="filter, clean, window, label")
    p.add_argument("input", help="STEW-layout directory")
    p = sub.add_parser("train", parents=[common], help="hold-out or k-fold training")
    p.add_argument("data", help="processed dataset directory")
    p = sub.add_parser("evaluate", parents=[common], help="score a checkpoint")
    p.add_argument("data", help="processed dataset directory")
    p = sub.add_parser("report", parents=[common], help="table and box plot of reports")
    p.add_argument("reports", nargs="+", help="report.json files")
    sub.add_parser("settings", help="list every setting with its default")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "settings":
        for key, (default, doc) in SETTINGS.items():
            print(f"{key} = {default}    # {doc}")
        return EXIT_OK
    try:
        settings = resolve_settings(args)
        COMMANDS[args.command](settings, args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CortexloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
