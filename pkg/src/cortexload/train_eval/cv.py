"""Hold-out and stratified k-fold evaluation of fresh ConvNeXt-EEG models."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..convnext_eeg import ConvNeXtConfig, ConvNeXtEEG
from ..errors import CortexloadError, TrainingError
from ..sigproc.splits import stratified_holdout, stratified_kfold, stratified_split
from .optim import OptimizerConfig
from .stats import confidence_interval
from .training import History, TrainConfig, evaluate, train


@dataclass
class FoldResult:
    index: int
    accuracy: float
    confusion: np.ndarray
    history: History
    test_size: int
    state: dict = field(repr=False, default_factory=dict)


@dataclass
class CvReport:
    mode: str                       # "cv" or "holdout"
    folds: list
    seed: int
    ci_method: str = "t"
    elapsed_s: float = 0.0

    @property
    def fold_accuracies(self):
        return [f.accuracy for f in self.folds]

    @property
    def confusions(self):
        return [f.confusion for f in self.folds]

    @property
    def mean(self):
        return float(np.mean(self.fold_accuracies))

    @property
    def ci_half_width(self):
        if len(self.folds) < 2:
            return None
        return confidence_interval(self.fold_accuracies, 0.95, self.ci_method)[1]


def resolve_workers(requested=None):
    """Worker count from the argument or CORTEXLOAD_THREADS (0 = one per CPU)."""
    if requested is None:
        requested = int(os.environ.get("CORTEXLOAD_THREADS", "1") or 1)
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


def _fold_streams(seed, k):
    # one (init, split, train) triple per fold
    return [child.spawn(3) for child in np.random.SeedSequence(seed).spawn(k)]


def _fold_job(args):
    (index, epoch_set, train_idx, test_idx, streams, model_config, train_config,
     optimizer_config, val_fraction) = args
    init_ss, split_ss, train_ss = streams
    train_part = epoch_set.subset(train_idx)
    keep, held = stratified_holdout(train_part, val_fraction,
                                    int(split_ss.generate_state(1)[0]))
    if train_config.checkpoint_dir:
        train_config = replace(train_config,
                               checkpoint_dir=os.path.join(train_config.checkpoint_dir,
                                                           f"fold_{index}"))
    model = ConvNeXtEEG(model_config, rng=np.random.default_rng(init_ss))
    try:
        _, history = train(model, train_part.subset(keep), train_part.subset(held),
                           train_config, optimizer_config, np.random.default_rng(train_ss))
    except CortexloadError as exc:
        raise TrainingError(f"fold {index}: {exc}") from exc
    test = epoch_set.subset(test_idx)
    acc, confusion = evaluate(model, None, test, train_config.eval_batch_size)
    return FoldResult(index, acc, confusion, history, len(test), model.state())


def _model_config_for(epoch_set, model_config):
    model_config = model_config or ConvNeXtConfig()
    if model_config.num_classes != epoch_set.class_count:
        model_config = replace(model_config, num_classes=epoch_set.class_count)
    return model_config


def cross_validate(epoch_set, k=5, model_config=None, train_config=None, optimizer_config=None,
                   seed=0, val_fraction=0.15, workers=None, ci_method="t"):
    """Stratified k-fold: one freshly initialised model per fold.

    Inside each training fold a stratified ``val_fraction`` is held out for
    model selection. Fold seeds derive from ``seed``; folds are independent
    and run in a process pool when more than one worker is allowed.
    """
    started = time.perf_counter()
    train_config = train_config or TrainConfig()
    optimizer_config = optimizer_config or OptimizerConfig(lr=train_config.lr)
    model_config = _model_config_for(epoch_set, model_config)
    folds = stratified_kfold(epoch_set, k, seed)
    streams = _fold_streams(seed, k)
    jobs = [(i, epoch_set, tr, te, streams[i], model_config, train_config, optimizer_config,
             val_fraction) for i, (tr, te) in enumerate(folds)]
    workers = min(resolve_workers(workers), k)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fold_job, jobs))
    else:
        results = [_fold_job(job) for job in jobs]
    return CvReport("cv", results, seed, ci_method, time.perf_counter() - started)


def holdout(epoch_set, ratios=(70, 15, 15), model_config=None, train_config=None,
            optimizer_config=None, seed=0):
    """One model trained on the train split, selected on val, scored on test."""
    started = time.perf_counter()
    train_config = train_config or TrainConfig()
    optimizer_config = optimizer_config or OptimizerConfig(lr=train_config.lr)
    model_config = _model_config_for(epoch_set, model_config)
    init_ss, split_ss, train_ss = np.random.SeedSequence(seed).spawn(3)
    tr, va, te = stratified_split(epoch_set, ratios, int(split_ss.generate_state(1)[0]))
    model = ConvNeXtEEG(model_config, rng=np.random.default_rng(init_ss))
    _, history = train(model, epoch_set.subset(tr), epoch_set.subset(va), train_config,
                       optimizer_config, np.random.default_rng(train_ss))
    test = epoch_set.subset(te)
    acc, confusion = evaluate(model, None, test, train_config.eval_batch_size)
    fold = FoldResult(0, acc, confusion, history, len(test), model.state())
    return CvReport("holdout", [fold], seed, "t", time.perf_counter() - started)
