"""
Band-pass filtering and ICA artifact rejection
==============================================

Zero-phase Butterworth filtering of a recording, then FastICA with
kurtosis-based removal of spiky components.
"""

# %%
import numpy as np
from scipy.signal import sawtooth

from cortexload.sigproc import (Condition, FilterSpec, RawRecording, bandpass, excess_kurtosis,
                                fastica, reject_artifacts)
from cortexload.sigproc.filters import magnitude_response

fs = 128.0
spec = FilterSpec()          # 0.5-45 Hz, order 4, applied forward and backward
freqs = np.array([0.1, 0.5, 10.0, 45.0, 60.0])
gain = magnitude_response(spec, fs, freqs) ** 2
for f, g in zip(freqs, gain):
    print(f"{f:5.1f} Hz  {20 * np.log10(g):8.2f} dB")

# %%
# A 10 Hz tone riding on a large DC offset: the offset goes, the tone stays
t = np.arange(int(20 * fs)) / fs
rec = RawRecording(1, Condition.REST, np.atleast_2d(4200 + np.sin(2 * np.pi * 10 * t)),
                   channel_names=("O1",))
out = bandpass(rec, spec).data[0, 128:-128]
print("mean after filtering", out.mean(), "peak", out.max())

# %%
# Three sources mixed into three channels; one of them is a spike train
rng = np.random.default_rng(3)
n = 8192
spikes = np.zeros(n)
spikes[rng.choice(n, 30, replace=False)] = rng.choice([-1, 1], 30) * 25.0
sources = np.vstack([np.sin(2 * np.pi * 7 * np.arange(n) / fs),
                     sawtooth(2 * np.pi * 3 * np.arange(n) / fs), spikes])
mixed = (rng.normal(size=(3, 3)) + 2 * np.eye(3)) @ sources
rec = RawRecording(1, Condition.TASK, mixed, channel_names=("F3", "F4", "O1"))
result = fastica(rec.data, rng=np.random.default_rng(0))
print("iterations", result.n_iter)
print("component kurtosis", np.round([excess_kurtosis(s) for s in result.sources], 2))

# %%
# Reject components above the threshold and rebuild the channels
cleaned, rejected = reject_artifacts(rec, result, kurtosis_threshold=8.0)
print("rejected components", rejected)
print("channel peak before", np.abs(rec.data).max().round(1),
      "after", np.abs(cleaned.data).max().round(1))
