"""Reading and writing STEW-layout recording directories.

A directory holds one text file per recording (one row per sample, one
whitespace-separated column per channel) named ``sub{NN}_{lo|hi}.txt`` and a
``ratings.txt`` whose lines are ``subject_id condition rating``. The native
STEW ratings layout ``subject, rest_rating, task_rating`` is also accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import IngestionError, ParseError
from .recording import EMOTIV_CHANNELS, SAMPLE_RATE, Condition, RawRecording, warn

DEFAULT_PATTERN = r"sub(?P<subject>\d+)_(?P<condition>lo|hi)\.txt"


@dataclass
class StewLayout:
    pattern: str = DEFAULT_PATTERN
    ratings_file: str = "ratings.txt"
    channel_names: tuple = EMOTIV_CHANNELS
    sample_rate: float = SAMPLE_RATE
    exclude_channels: tuple = field(default_factory=tuple)


def _locate_bad_row(path, n_cols):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != n_cols:
                raise ParseError(f"expected {n_cols} columns, found {len(tokens)}",
                                 path=path, line=lineno)
            for tok in tokens:
                try:
                    float(tok)
                except ValueError:
                    raise ParseError(f"non-numeric value {tok!r}", path=path,
                                     line=lineno) from None
    raise ParseError("unreadable recording file", path=path)


def read_recording_file(path, n_channels=14):
    """channels x samples array from a one-row-per-sample text file."""
    path = Path(path)
    try:
        rows = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError:
        _locate_bad_row(path, n_channels)
    if rows.size == 0:
        return np.zeros((n_channels, 0))
    if rows.shape[1] != n_channels or not np.all(np.isfinite(rows)):
        _locate_bad_row(path, n_channels)
        raise ParseError("non-finite value", path=path)
    return np.ascontiguousarray(rows.T)


def read_ratings(path):
    """{(subject, Condition): rating}."""
    path = Path(path)
    ratings = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        tokens = line.replace(",", " ").split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) != 3:
            raise ParseError(f"expected 3 fields, found {len(tokens)}", path=path, line=lineno)
        try:
            subject = int(tokens[0])
            try:
                entries = [(Condition.parse(tokens[1]), int(tokens[2]))]
            except ValueError:
                entries = [(Condition.REST, int(tokens[1])), (Condition.TASK, int(tokens[2]))]
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        for condition, rating in entries:
            if not 1 <= rating <= 9:
                raise ParseError(f"rating {rating} outside 1-9", path=path, line=lineno)
            if (subject, condition) in ratings:
                raise IngestionError(f"duplicate rating for subject {subject} "
                                     f"{condition.value} at {path}:{lineno}", stage="load")
            ratings[(subject, condition)] = rating
    return ratings


def load_stew(directory, layout=None):
    """All recordings in ``directory``, sorted by (subject, condition)."""
    layout = layout or StewLayout()
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"{directory} is not a directory")
    regex = re.compile(layout.pattern)
    ratings_path = directory / layout.ratings_file
    ratings = read_ratings(ratings_path) if ratings_path.exists() else {}

    found = {}
    for path in sorted(directory.iterdir()):
        m = regex.fullmatch(path.name)
        if m is None:
            continue
        key = (int(m.group("subject")), Condition.parse(m.group("condition")))
        if key in found:
            raise IngestionError(f"duplicate recording for subject {key[0]} "
                                 f"{key[1].value}: {found[key].name} and {path.name}",
                                 stage="load")
        found[key] = path

    if not found:
        warn(f"no recordings matching {layout.pattern!r} in {directory}")
        return []

    recordings, missing = [], []
    for key in sorted(found, key=lambda k: (k[0], k[1].value)):
        data = read_recording_file(found[key], len(layout.channel_names))
        rating = ratings.get(key)
        if rating is None:
            missing.append(f"{key[0]}/{key[1].value}")
        rec = RawRecording(key[0], key[1], data, rating=rating,
                           sample_rate=layout.sample_rate, channel_names=layout.channel_names)
        if layout.exclude_channels:
            rec = rec.drop_channels(layout.exclude_channels)
        recordings.append(rec)
    if missing:
        warn(f"{len(missing)} recording(s) without rating: {', '.join(missing)}")
    return recordings


def write_stew(recordings, directory, fmt="%.6f"):
    """Write recordings and ratings in the layout ``load_stew`` reads."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for rec in sorted(recordings, key=lambda r: (r.subject_id, r.condition.value)):
        name = f"sub{rec.subject_id:02d}_{rec.condition.file_tag}.txt"
        np.savetxt(directory / name, rec.data.T, fmt=fmt, delimiter=" ")
        if rec.rating is not None:
            lines.append(f"{rec.subject_id} {rec.condition.value} {rec.rating}")
    (directory / "ratings.txt").write_text("\n".join(lines) + ("\n" if lines else ""))
    return directory
