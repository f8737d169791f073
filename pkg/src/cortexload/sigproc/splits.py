"""Seeded stratified hold-out splits and k-fold partitions (window indices)."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, StratificationError


def _labels_of(data):
    return np.asarray(getattr(data, "labels", data), dtype=np.int64)


def _apportion(n, ratios):
    """Largest-remainder split of n items; every part gets >= 1 when n allows."""
    ratios = np.asarray(ratios, dtype=float)
    quotas = n * ratios / ratios.sum()
    counts = np.floor(quotas).astype(int)
    order = np.argsort(-(quotas - counts), kind="stable")
    for i in order[: n - counts.sum()]:
        counts[i] += 1
    while n >= len(counts) and counts.min() == 0:
        counts[np.argmax(counts)] -= 1
        counts[np.argmin(counts)] += 1
    return counts


def stratified_split(data, ratios=(70, 15, 15), seed=0, groups=None):
    """(train, val, test) index arrays, shuffled per class.

    With ``groups`` (e.g. subject ids) whole groups are assigned instead of
    single windows; class balance is then only approximate.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) < 0 or abs(sum(ratios) - 100.0) > 1e-9:
        raise ConfigurationError(f"ratios must be three non-negative numbers summing "
                                 f"to 100, got {ratios}")
    labels = _labels_of(data)
    rng = np.random.default_rng(seed)
    parts = [[], [], []]
    if groups is not None:
        groups = np.asarray(groups)
        uniq = np.unique(groups)
        if len(uniq) < 3:
            raise StratificationError(f"{len(uniq)} groups cannot fill 3 splits",
                                      stage="split")
        perm = rng.permutation(uniq)
        counts = _apportion(len(uniq), ratios)
        bounds = np.cumsum(counts)[:-1]
        for part, chunk in zip(parts, np.split(perm, bounds)):
            part.append(np.flatnonzero(np.isin(groups, chunk)))
    else:
        for cls in np.unique(labels):
            idx = np.flatnonzero(labels == cls)
            if len(idx) < 3:
                raise StratificationError(f"class {cls} has {len(idx)} windows; "
                                          f"3 splits need at least 3", stage="split")
            idx = rng.permutation(idx)
            bounds = np.cumsum(_apportion(len(idx), ratios))[:-1]
            for part, chunk in zip(parts, np.split(idx, bounds)):
                part.append(chunk)
    return tuple(np.sort(np.concatenate(p)) for p in parts)


def stratified_kfold(data, k=5, seed=0):
    """List of k (train_idx, test_idx) pairs; each window is tested once.

    Per class, shuffled indices are dealt into k nearly equal parts. The
    larger parts rotate across classes so fold totals stay balanced too.
    """
    k = int(k)
    if k < 2:
        raise ConfigurationError(f"k must be >= 2, got {k}")
    labels = _labels_of(data)
    rng = np.random.default_rng(seed)
    tests = [[] for _ in range(k)]
    offset = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < k:
            raise StratificationError(f"class {cls} has {len(idx)} windows, fewer than "
                                      f"k={k}", stage="kfold")
        idx = rng.permutation(idx)
        base, extra = divmod(len(idx), k)
        sizes = np.full(k, base)
        sizes[(offset + np.arange(extra)) % k] += 1
        offset = (offset + extra) % k
        for f, chunk in enumerate(np.split(idx, np.cumsum(sizes)[:-1])):
            tests[f].append(chunk)
    everything = np.arange(len(labels))
    folds = []
    for parts in tests:
        test = np.sort(np.concatenate(parts))
        folds.append((np.setdiff1d(everything, test, assume_unique=True), test))
    return folds


def stratified_holdout(data, fraction=0.15, seed=0):
    """(keep, held) index arrays holding out ``fraction`` of every class."""
    if not 0 < fraction < 1:
        raise ConfigurationError(f"fraction must lie in (0, 1), got {fraction}")
    labels = _labels_of(data)
    rng = np.random.default_rng(seed)
    keep, held = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < 2:
            raise StratificationError(f"class {cls} has {len(idx)} windows; a hold-out "
                                      f"split needs at least 2", stage="split")
        idx = rng.permutation(idx)
        n_keep = _apportion(len(idx), (1.0 - fraction, fraction))[0]
        keep.append(idx[:n_keep])
        held.append(idx[n_keep:])
    return np.sort(np.concatenate(keep)), np.sort(np.concatenate(held))
