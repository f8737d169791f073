"""Optimizers, training, cross-validation and fold statistics."""

from .cv import CvReport, FoldResult, cross_validate, holdout, resolve_workers
from .optim import (ADAM_DEFAULTS, OptimizerConfig, OptimizerState, adam_step, adamw_step,
                    optimizer_step)
from .reports import (comparison_table, format_cell, read_report, render_box_svg,
                      report_dict, write_report)
from .stats import box_summary, confidence_interval, critical_value
from .training import History, TrainConfig, evaluate, learning_rate, train

__all__ = [
    "OptimizerConfig", "OptimizerState", "ADAM_DEFAULTS", "adam_step", "adamw_step",
    "optimizer_step",
    "TrainConfig", "History", "train", "evaluate", "learning_rate",
    "CvReport", "FoldResult", "cross_validate", "holdout", "resolve_workers",
    "confidence_interval", "critical_value", "box_summary",
    "report_dict", "write_report", "read_report", "format_cell", "comparison_table",
    "render_box_svg",
]
