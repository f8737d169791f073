from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError

EMOTIV_CHANNELS = ("AF3", "F7", "F3", "FC5", "T7", "P7", "O1",
                   "O2", "P8", "T8", "FC6", "F4", "F8", "AF4")
SAMPLE_RATE = 128.0


class DataWarning(UserWarning):
    """Recoverable data problem (empty input, missing rating, flat channel)."""


def warn(message):
    warnings.warn(message, DataWarning, stacklevel=3)


class Condition(enum.Enum):
    REST = "rest"
    TASK = "task"

    @classmethod
    def parse(cls, token):
        t = str(token).strip().lower()
        if t in ("rest", "lo", "no", "notask", "no_task"):
            return cls.REST
        if t in ("task", "hi", "simkap"):
            return cls.TASK
        raise ValueError(f"unknown condition {token!r}")

    @property
    def file_tag(self):
        return "lo" if self is Condition.REST else "hi"


@dataclass
class RawRecording:
    """One subject/condition segment: channels x samples, microvolt scale."""

    subject_id: int
    condition: Condition
    data: np.ndarray
    rating: int | None = None
    sample_rate: float = SAMPLE_RATE
    channel_names: tuple = field(default=EMOTIV_CHANNELS)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.channel_names = tuple(self.channel_names)
        if self.data.ndim != 2:
            raise ConfigurationError(f"recording data must be channels x samples, "
                                     f"got shape {self.data.shape}")
        if self.data.shape[0] != len(self.channel_names):
            raise ConfigurationError(f"{self.data.shape[0]} data rows but "
                                     f"{len(self.channel_names)} channel names")
        if self.rating is not None and not 1 <= int(self.rating) <= 9:
            raise ConfigurationError(f"rating {self.rating} outside 1-9")
        if self.sample_rate <= 0:
            raise ConfigurationError("sample_rate must be positive")

    @property
    def key(self):
        return (self.subject_id, self.condition)

    @property
    def n_samples(self):
        return self.data.shape[1]

    @property
    def n_channels(self):
        return self.data.shape[0]

    def with_data(self, data, **changes):
        return replace(self, data=data, **changes)

    def drop_channels(self, names):
        names = set(names)
        unknown = names - set(self.channel_names)
        if unknown:
            raise ConfigurationError(f"cannot exclude unknown channels {sorted(unknown)}")
        keep = [i for i, n in enumerate(self.channel_names) if n not in names]
        return replace(self, data=self.data[keep],
                       channel_names=tuple(self.channel_names[i] for i in keep))
