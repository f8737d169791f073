"""EEG mental-workload classification with a compact ConvNeXt."""

__version__ = "0.1.0"
