"""STEW-style ingestion, cleaning, windowing, labelling and splitting."""

from .epochs import (EpochSet, PreprocessConfig, Task, assign_labels, epoch, load_epoch_set,
                     min_max_scale, preprocess, save_epoch_set, window_count)
from .filters import FilterSpec, bandpass, design_sos
from .ica import ICAResult, excess_kurtosis, fastica, reject_artifacts
from .recording import EMOTIV_CHANNELS, Condition, DataWarning, RawRecording
from .splits import stratified_holdout, stratified_kfold, stratified_split
from .stew import StewLayout, load_stew, write_stew
from .synth import SynthConfig, synth_dataset

__all__ = [
    "EMOTIV_CHANNELS", "Condition", "DataWarning", "RawRecording",
    "StewLayout", "load_stew", "write_stew",
    "FilterSpec", "bandpass", "design_sos",
    "ICAResult", "fastica", "reject_artifacts", "excess_kurtosis",
    "EpochSet", "PreprocessConfig", "Task", "assign_labels", "epoch", "min_max_scale",
    "preprocess", "window_count", "save_epoch_set", "load_epoch_set",
    "stratified_split", "stratified_kfold", "stratified_holdout",
    "SynthConfig", "synth_dataset",
]
