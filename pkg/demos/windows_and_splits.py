"""
From recordings to labelled windows
===================================

Synthetic STEW-layout recordings go through filtering, min-max scaling and
1 s windowing with 0.5 s hop; labels come from the task or the rating.
"""

# %%
import tempfile
import warnings

import numpy as np

from cortexload.sigproc import (PreprocessConfig, SynthConfig, Task, load_stew, preprocess,
                                stratified_kfold, stratified_split, synth_dataset, window_count,
                                write_stew)

recordings = synth_dataset(SynthConfig(subjects=6, duration_s=30.0), seed=0)
for rec in recordings[:4]:
    print(rec.subject_id, rec.condition.value, rec.data.shape, "rating", rec.rating)

# %%
# The files on disk follow the STEW layout and read back unchanged
with tempfile.TemporaryDirectory() as tmp:
    write_stew(recordings, tmp)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        again = load_stew(tmp)
print("recordings read back:", len(again))

# %%
# 30 s at 128 Hz is 3840 samples
print("windows per recording:", window_count(3840))
binary, _ = preprocess(recordings, PreprocessConfig(task=Task.BINARY))
ternary, _ = preprocess(recordings, PreprocessConfig(task=Task.TERNARY))
print("binary ", len(binary), binary.class_counts())
print("ternary", len(ternary), ternary.class_counts())
print("window value range", binary.windows.min(), binary.windows.max())

# %%
# Stratified 70:15:15 split and 5-fold partition
train, val, test = stratified_split(binary, (70, 15, 15), seed=0)
print("split sizes", len(train), len(val), len(test))
for i, (tr, te) in enumerate(stratified_kfold(binary, 5, seed=0)):
    print(f"fold {i}: test {len(te)} windows, classes {np.bincount(binary.labels[te])}")
