"""
Training, cross-validation and reporting
========================================

A short 5-fold run on synthetic ternary data, then the mean with a 95%
Student-t interval and a box plot of the fold accuracies.
"""

# %%
import tempfile
import warnings
from pathlib import Path

from cortexload.sigproc import PreprocessConfig, SynthConfig, Task, preprocess, synth_dataset
from cortexload.train_eval import TrainConfig, confidence_interval, cross_validate, report_dict
from cortexload.train_eval.reports import (box_rows, comparison_table, render_box_svg,
                                           write_box_csv)

recordings = synth_dataset(SynthConfig(subjects=3, duration_s=40.0), seed=2)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    data, _ = preprocess(recordings, PreprocessConfig(task=Task.TERNARY))
print(len(data), "windows, classes", data.class_counts())

# %%
# Three epochs per fold keep this quick. The default model sits near chance
# for its first several epochs, so expect roughly one-in-three accuracy here.
report = cross_validate(data, k=5, train_config=TrainConfig(epochs=3), seed=0)
for fold in report.folds:
    print(f"fold {fold.index}: {100 * fold.accuracy:.2f}%  "
          f"train loss {fold.history.column('train_loss')[-1]:.3f}")
print("confusion of fold 0 (rows true, columns predicted)\n", report.folds[0].confusion)

# %%
# The interval in isolation
print(confidence_interval([0.90, 0.92, 0.94, 0.96, 0.98]))

# %%
summary = report_dict(report, "ternary", data.class_count, {"epochs": 3})
print(comparison_table([summary], ["demo"]))
with tempfile.TemporaryDirectory() as tmp:
    rows = box_rows([summary], ["demo"])
    write_box_csv(Path(tmp) / "box.csv", rows)
    print((Path(tmp) / "box.csv").read_text())
    print(render_box_svg(rows)[:200], "...")
