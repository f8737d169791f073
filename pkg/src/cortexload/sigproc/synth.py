"""Synthetic STEW-shaped recordings with a known workload signature.

Each channel is pink (1/f) noise plus a continuous train of 8-12 Hz bursts.
The alpha amplitude shrinks geometrically with workload level: rest is
level 0 and a task recording of class c is level c + 1, so 8-12 Hz band
power decreases monotonically with workload.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .recording import EMOTIV_CHANNELS, Condition, RawRecording

# relative alpha strength per electrode: strongest over parieto-occipital sites
_ALPHA_WEIGHT = {"O1": 1.0, "O2": 1.0, "P7": 0.9, "P8": 0.9, "T7": 0.6, "T8": 0.6,
                 "FC5": 0.45, "FC6": 0.45, "F7": 0.4, "F8": 0.4, "F3": 0.4, "F4": 0.4,
                 "AF3": 0.35, "AF4": 0.35}


@dataclass(frozen=True)
class SynthConfig:
    subjects: int = 6
    classes: int = 3
    duration_s: float = 150.0
    sample_rate: float = 128.0
    snr: float = 4.0            # alpha / noise amplitude ratio at rest
    level_ratio: float = 0.4    # alpha amplitude factor per workload level
    noise_uv: float = 10.0
    offset_uv: float = 4200.0
    burst_s: tuple = (0.5, 2.0)
    include_rest: bool = True

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.sample_rate))


def task_rating(cls, classes):
    """Representative 1-9 rating for workload class ``cls`` of ``classes``."""
    width = 9.0 / classes
    return int(np.clip(np.floor(width * cls + width / 2.0) + 1, 1, 9))


def pink_noise(rng, shape):
    """Unit-variance 1/f noise along the last axis."""
    n = shape[-1]
    spectrum = np.fft.rfft(rng.normal(size=shape), axis=-1)
    f = np.fft.rfftfreq(n)
    scale = np.zeros_like(f)
    scale[1:] = 1.0 / np.sqrt(f[1:])
    x = np.fft.irfft(spectrum * scale, n=n, axis=-1)
    x -= x.mean(axis=-1, keepdims=True)
    return x / x.std(axis=-1, keepdims=True)


def alpha_bursts(rng, n, fs, burst_s=(0.5, 2.0)):
    """Phase-continuous 8-12 Hz oscillation with per-burst frequency and gain."""
    freq = np.empty(n)
    gain = np.empty(n)
    pos = 0
    while pos < n:
        length = max(1, int(rng.uniform(*burst_s) * fs))
        freq[pos:pos + length] = rng.uniform(8.5, 11.5)
        gain[pos:pos + length] = rng.uniform(0.75, 1.0)
        pos += length
    smooth = max(1, int(0.25 * fs))
    gain = np.convolve(np.pad(gain, smooth, mode="edge"), np.ones(smooth) / smooth,
                       mode="same")[smooth:-smooth]
    phase = 2 * np.pi * np.cumsum(freq) / fs + rng.uniform(0, 2 * np.pi)
    return gain * np.sin(phase)


def synth_recording(rng, subject_id, condition, level, rating, config,
                    channel_names=EMOTIV_CHANNELS):
    n, fs = config.n_samples, config.sample_rate
    c = len(channel_names)
    noise = 0.8 * pink_noise(rng, (c, n)) + 0.2 * pink_noise(rng, (1, n))
    alpha = alpha_bursts(rng, n, fs, config.burst_s)
    weights = np.array([_ALPHA_WEIGHT.get(name, 0.5) for name in channel_names])
    lags = rng.integers(0, 4, size=c)
    alpha_ch = np.stack([np.roll(alpha, int(lag)) for lag in lags]) * weights[:, None]
    amplitude = config.snr * config.level_ratio ** level
    subject_gain = np.exp(rng.normal(0.0, 0.1))
    data = config.noise_uv * subject_gain * (noise + amplitude * alpha_ch)
    data += config.offset_uv + rng.normal(0.0, 50.0, size=(c, 1))
    return RawRecording(subject_id, condition, data, rating=rating, sample_rate=fs,
                        channel_names=channel_names)


def synth_dataset(config=None, seed=0):
    """Rest and task recordings for ``config.subjects`` subjects.

    Subject s performs the task at workload class (s - 1) mod classes; the
    class is written into the task rating (see ``task_rating``) and rest
    recordings are rated 1.
    """
    config = config or SynthConfig()
    streams = np.random.SeedSequence(seed).spawn(config.subjects)
    recordings = []
    for s, ss in enumerate(streams, start=1):
        rest_ss, task_ss = ss.spawn(2)
        if config.include_rest:
            recordings.append(synth_recording(np.random.default_rng(rest_ss), s,
                                              Condition.REST, 0, 1, config))
        cls = (s - 1) % config.classes
        recordings.append(synth_recording(np.random.default_rng(task_ss), s, Condition.TASK,
                                          cls + 1, task_rating(cls, config.classes), config))
    return recordings
