"""Mini-batch training with best-validation model selection, and evaluation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import numkit as nk
from ..convnext_eeg import is_decayed, model_forward, save_checkpoint
from ..errors import ConfigurationError, TrainingError
from .optim import OptimizerConfig, OptimizerState, optimizer_step

HISTORY_COLUMNS = ("epoch", "train_loss", "train_acc", "val_acc")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 16
    lr: float = 1e-4
    seed: int = 0
    patience: int | None = None       # epochs without val improvement; None = off
    checkpoint_every: int = 0         # 0 = off
    checkpoint_dir: str | None = None
    schedule: str = "constant"        # or "cosine" (linear warmup then cosine decay)
    warmup_epochs: int = 0
    eval_batch_size: int = 256
    noise_std: float = 0.0            # additive Gaussian noise on training batches; 0 = off

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.patience is not None and self.patience < 1:
            raise ConfigurationError("patience must be >= 1 when set")
        if self.schedule not in ("constant", "cosine"):
            raise ConfigurationError(f"unknown schedule {self.schedule!r}")
        if not self.noise_std >= 0:
            raise ConfigurationError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.checkpoint_every and not self.checkpoint_dir:
            raise ConfigurationError("checkpoint_every needs checkpoint_dir")


@dataclass
class History:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return [row[name] for row in self.rows]

    def write_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                                 for k, v in row.items() if k in HISTORY_COLUMNS})
        return path


def learning_rate(step, total_steps, base_lr, schedule="constant", warmup_steps=0):
    if schedule == "constant":
        return base_lr
    if warmup_steps and step < warmup_steps:
        return base_lr * (step + 1) / warmup_steps
    span = max(total_steps - warmup_steps, 1)
    progress = min((step - warmup_steps) / span, 1.0)
    return 0.5 * base_lr * (1.0 + math.cos(math.pi * progress))


def evaluate(model, params, epoch_set, batch_size=256):
    """(accuracy, confusion) with confusion[true, predicted]; argmax ties go low."""
    params = model.params if params is None else params
    k = model.config.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    n = len(epoch_set)
    if n == 0:
        return float("nan"), confusion
    with nk.no_grad():
        for i in range(0, n, batch_size):
            logits = model_forward(epoch_set.windows[i:i + batch_size], params, model.config)
            pred = np.argmax(logits.data, axis=1)
            np.add.at(confusion, (epoch_set.labels[i:i + batch_size], pred), 1)
    return float(np.trace(confusion) / n), confusion


def _snapshot(params):
    return {k: p.data.copy() for k, p in params.items()}


def train(model, train_set, val_set, train_config=None, optimizer_config=None, rng=None):
    """Train ``model.params`` in place; returns (best params, History).

    The returned (and installed) parameters are those of the epoch with the
    highest validation accuracy, the earliest on ties. Without a validation
    set the final epoch's parameters are kept. ``train_config.lr`` is the base
    rate handed to the optimizer.
    """
    tc = train_config or TrainConfig()
    oc = optimizer_config or OptimizerConfig(lr=tc.lr)
    rng = rng if rng is not None else np.random.default_rng(tc.seed)
    if len(train_set) == 0:
        raise TrainingError("empty training set")
    if train_set.class_count > model.config.num_classes:
        raise ConfigurationError(f"{train_set.class_count} classes but the model has "
                                 f"{model.config.num_classes} outputs")
    params = model.params
    history = History()
    state = OptimizerState.for_params({k: p.data for k, p in params.items()})
    n = len(train_set)
    steps_per_epoch = math.ceil(n / tc.batch_size)
    total_steps = steps_per_epoch * tc.epochs
    warmup_steps = steps_per_epoch * tc.warmup_epochs
    has_val = val_set is not None and len(val_set) > 0
    best_acc, best_state, stale = -1.0, _snapshot(params), 0
    step = 0
    for ep in range(1, tc.epochs + 1):
        order = rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for b in range(steps_per_epoch):
            idx = order[b * tc.batch_size:(b + 1) * tc.batch_size]
            xb, yb = train_set.windows[idx], train_set.labels[idx]
            if tc.noise_std:
                xb = xb + rng.normal(0.0, tc.noise_std, xb.shape)
            logits = model_forward(xb, params, model.config, training=True, rng=rng)
            loss = nk.softmax_cross_entropy(logits, yb)
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss at epoch {ep}, step {b + 1}")
            for p in params.values():
                p.zero_grad()
            nk.backward(loss)
            grads = {k: (p.grad if p.grad is not None else np.zeros_like(p.data))
                     for k, p in params.items()}
            lr = learning_rate(step, total_steps, tc.lr, tc.schedule, warmup_steps)
            try:
                updated, state = optimizer_step({k: p.data for k, p in params.items()}, grads,
                                                state, oc, lr, is_decayed)
            except TrainingError as exc:
                raise TrainingError(f"epoch {ep}, step {b + 1}: {exc}") from exc
            for k, p in params.items():
                p.data = updated[k]
            step += 1
            loss_sum += float(loss.data) * len(idx)
            correct += int(np.sum(np.argmax(logits.data, axis=1) == yb))
        val_acc = evaluate(model, params, val_set, tc.eval_batch_size)[0] if has_val else None
        history.rows.append({"epoch": ep, "train_loss": loss_sum / n,
                             "train_acc": correct / n, "val_acc": val_acc})
        if has_val:
            if val_acc > best_acc:
                best_acc, best_state, stale = val_acc, _snapshot(params), 0
            else:
                stale += 1
        if tc.checkpoint_every and ep % tc.checkpoint_every == 0:
            save_checkpoint(Path(tc.checkpoint_dir) / f"epoch_{ep:04d}", model.config, params,
                            {"epoch": ep})
        if tc.patience is not None and has_val and stale >= tc.patience:
            break
    if has_val or tc.epochs == 0:
        for k, p in params.items():
            p.data = best_state[k]
    return params, history

