"""Scaling, windowing, labelling and the fixed preprocessing order.

filter -> ICA rejection (optional) -> min-max scale -> epoch -> label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import numkit as nk
from ..errors import (ConfigurationError, ConvergenceError, LabelingError, ParseError,
                      PipelineError)
from .filters import FilterSpec, bandpass
from .ica import fastica, reject_artifacts
from .recording import Condition, warn

WINDOW_LEN = 128
HOP = 64


class Task(enum.Enum):
    BINARY = "binary"
    TERNARY = "ternary"

    @property
    def class_count(self):
        return 2 if self is Task.BINARY else 3


def min_max_scale(recording):
    """Per channel (x - min) / (max - min) over the whole recording.

    A flat channel maps to zeros with a warning.
    """
    x = recording.data
    lo = x.min(axis=1, keepdims=True)
    span = x.max(axis=1, keepdims=True) - lo
    flat = span[:, 0] == 0
    if flat.any():
        names = [recording.channel_names[i] for i in np.flatnonzero(flat)]
        warn(f"subject {recording.subject_id} {recording.condition.value}: "
             f"flat channel(s) {', '.join(names)} scaled to 0")
    safe = np.where(span == 0, 1.0, span)
    scaled = (x - lo) / safe
    scaled[flat] = 0.0
    return recording.with_data(scaled)


def window_count(n_samples, window_len=WINDOW_LEN, hop=HOP):
    if n_samples < window_len:
        return 0
    return (n_samples - window_len) // hop + 1


def epoch(data, window_len=WINDOW_LEN, hop=HOP):
    """(n_windows, channels, window_len) slices starting at 0, hop, 2*hop, ...

    ``data`` is a channels x samples array or a recording; the trailing
    partial window is dropped.
    """
    data = getattr(data, "data", data)
    data = np.asarray(data, dtype=np.float64)
    if window_len < 1 or hop < 1:
        raise ConfigurationError("window_len and hop must be positive")
    n = window_count(data.shape[1], window_len, hop)
    if n == 0:
        warn(f"recording of {data.shape[1]} samples is shorter than one "
             f"{window_len}-sample window")
        return np.zeros((0, data.shape[0], window_len))
    starts = np.arange(n) * hop
    return np.stack([data[:, s:s + window_len] for s in starts])


@dataclass
class EpochSet:
    """Windows shaped (n, 1, channels, samples) with labels and provenance."""

    windows: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray
    conditions: np.ndarray
    window_index: np.ndarray
    class_count: int

    def __post_init__(self):
        self.windows = np.asarray(self.windows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.subjects = np.asarray(self.subjects, dtype=np.int64)
        self.conditions = np.asarray(self.conditions, dtype="<U4")
        self.window_index = np.asarray(self.window_index, dtype=np.int64)
        n = len(self.labels)
        if self.windows.ndim != 4 or self.windows.shape[0] != n or self.windows.shape[1] != 1:
            raise ConfigurationError(f"windows must be (n, 1, C, L) with n={n}, "
                                     f"got {self.windows.shape}")
        if not (len(self.subjects) == len(self.conditions) == len(self.window_index) == n):
            raise ConfigurationError("provenance length differs from window count")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ConfigurationError(f"labels outside [0, {self.class_count})")

    def __len__(self):
        return len(self.labels)

    @property
    def window_shape(self):
        return self.windows.shape[1:]

    @property
    def provenance(self):
        return list(zip(self.subjects.tolist(), self.conditions.tolist(),
                        self.window_index.tolist()))

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        return EpochSet(self.windows[idx], self.labels[idx], self.subjects[idx],
                        self.conditions[idx], self.window_index[idx], self.class_count)

    @classmethod
    def concatenate(cls, parts, class_count):
        parts = list(parts)
        if not parts:
            return cls.empty(class_count)
        return cls(np.concatenate([p.windows for p in parts]),
                   np.concatenate([p.labels for p in parts]),
                   np.concatenate([p.subjects for p in parts]),
                   np.concatenate([p.conditions for p in parts]),
                   np.concatenate([p.window_index for p in parts]), class_count)

    @classmethod
    def empty(cls, class_count, channels=14, window_len=WINDOW_LEN):
        return cls(np.zeros((0, 1, channels, window_len)), [], [], [], [], class_count)


def rating_class(rating, binning=(3, 6)):
    """Class index of a 1-9 rating given inclusive upper bin edges."""
    for cls, edge in enumerate(binning):
        if rating <= edge:
            return cls
    return len(binning)


def assign_labels(recordings, task=Task.BINARY, binning=(3, 6), window_len=WINDOW_LEN,
                  hop=HOP):
    """Epoch each recording and label its windows.

    Binary: rest -> 0, task -> 1. Ternary: task recordings only, labelled by
    the binned self-rating; rest recordings contribute nothing.
    """
    task = Task(task)
    if task is Task.TERNARY:
        unrated = sorted({r.subject_id for r in recordings
                          if r.condition is Condition.TASK and r.rating is None})
        if unrated:
            raise LabelingError(f"ternary labels need ratings; missing for subjects "
                                f"{unrated}", stage="label")
        if len(binning) != task.class_count - 1:
            raise ConfigurationError(f"ternary binning needs 2 edges, got {binning}")
    parts = []
    for rec in recordings:
        if task is Task.BINARY:
            label = 0 if rec.condition is Condition.REST else 1
        elif rec.condition is Condition.TASK:
            label = rating_class(rec.rating, binning)
        else:
            continue
        w = epoch(rec.data, window_len, hop)
        n = len(w)
        parts.append(EpochSet(w[:, None], np.full(n, label), np.full(n, rec.subject_id),
                              np.full(n, rec.condition.value), np.arange(n), task.class_count))
    channels = recordings[0].n_channels if recordings else 14
    if not parts:
        return EpochSet.empty(task.class_count, channels, window_len)
    return EpochSet.concatenate(parts, task.class_count)


@dataclass
class PreprocessConfig:
    task: Task = Task.BINARY
    filter: FilterSpec | None = field(default_factory=FilterSpec)
    ica: bool = False
    kurtosis_threshold: float = 8.0
    ica_max_iter: int = 400
    ica_tol: float = 1e-4
    binning: tuple = (3, 6)
    window_len: int = WINDOW_LEN
    hop: int = HOP
    seed: int = 0


@dataclass
class PreprocessLog:
    rejected_components: dict = field(default_factory=dict)
    n_recordings: int = 0


def clean_recording(rec, config, rng=None):
    """Filter and (optionally) ICA-reject one recording, then min-max scale it."""
    log = []
    try:
        if config.filter is not None:
            rec = bandpass(rec, config.filter)
        if config.ica:
            try:
                result = fastica(rec.data, max_iter=config.ica_max_iter, tol=config.ica_tol,
                                 rng=rng if rng is not None else np.random.default_rng(config.seed))
            except ConvergenceError as exc:
                warn(f"subject {rec.subject_id} {rec.condition.value}: ICA did not converge "
                     f"(delta {exc.delta:.3g}); artifact rejection skipped")
            else:
                rec, log = reject_artifacts(rec, result, config.kurtosis_threshold)
        rec = min_max_scale(rec)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage attached
        raise PipelineError(f"subject {rec.subject_id} {rec.condition.value}: {exc}",
                            stage="clean") from exc
    return rec, log


def preprocess(recordings, config=None):
    """Run the fixed pipeline over ``recordings``; returns (EpochSet, PreprocessLog)."""
    config = config or PreprocessConfig()
    log = PreprocessLog(n_recordings=len(recordings))
    task = Task(config.task)
    cleaned = []
    seeds = np.random.SeedSequence(config.seed).spawn(max(len(recordings), 1))
    for rec, ss in zip(recordings, seeds):
        if task is Task.TERNARY and rec.condition is Condition.REST:
            continue
        rec, rejected = clean_recording(rec, config, np.random.default_rng(ss))
        if rejected:
            log.rejected_components[f"{rec.subject_id}/{rec.condition.value}"] = rejected
        cleaned.append(rec)
    return assign_labels(cleaned, task, config.binning, config.window_len, config.hop), log


# processed dataset directory

def save_epoch_set(epochs, directory, manifest_extra=None):
    """manifest.txt + windows.bin/.hdr + labels.txt + provenance.txt."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    nk.save_tensor(directory / "windows", epochs.windows, name="windows")
    (directory / "labels.txt").write_text("".join(f"{v}\n" for v in epochs.labels.tolist()))
    (directory / "provenance.txt").write_text("".join(
        f"{s} {c} {i}\n" for s, c, i in epochs.provenance))
    counts = epochs.class_counts().tolist()
    lines = [f"windows = {len(epochs)}",
             f"window_shape = {' '.join(str(d) for d in epochs.window_shape)}",
             f"class_count = {epochs.class_count}",
             f"class_histogram = {' '.join(str(c) for c in counts)}"]
    for key, value in (manifest_extra or {}).items():
        lines.append(f"{key} = {value}")
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n")
    return directory


def read_manifest(path):
    path = Path(path)
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected key = value", path=path, line=lineno)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_epoch_set(directory):
    directory = Path(directory)
    manifest = read_manifest(directory / "manifest.txt")
    windows = nk.load_tensor(directory / "windows")
    labels = np.loadtxt(directory / "labels.txt", dtype=np.int64, ndmin=1)
    prov = [line.split() for line in (directory / "provenance.txt").read_text().splitlines()
            if line.strip()]
    if len(labels) != len(windows) or len(prov) != len(windows):
        raise ParseError("windows, labels and provenance disagree in length", path=directory)
    subjects = [int(p[0]) for p in prov]
    conditions = [p[1] for p in prov]
    index = [int(p[2]) for p in prov]
    return EpochSet(windows, labels, subjects, conditions, index, int(manifest["class_count"]))
