import numpy as np
import pytest

from cortexload.sigproc import SynthConfig, synth_dataset


@pytest.fixture(scope="session")
def stew_corpus():
    """45 subjects x {rest, task} x 19,200 samples of synthetic STEW-shaped data."""
    return synth_dataset(SynthConfig(subjects=45, duration_s=150.0), seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def _tiny_windows(n, classes, seed):
    """Separable windows: class k carries a constant offset of k / classes."""
    from cortexload.sigproc import EpochSet
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % classes
    windows = rng.uniform(0.0, 0.5, (n, 1, 14, 128)) + (labels / classes)[:, None, None, None]
    return EpochSet(windows, labels, np.arange(n) // 4, np.full(n, "hi"), np.arange(n), classes)


@pytest.fixture
def tiny_set():
    return _tiny_windows(40, 2, seed=3)


@pytest.fixture(scope="session")
def overfit_run():
    """Default model trained on 64 synthetic windows for 200 epochs (shared, ~2 min)."""
    import time
    import warnings

    from cortexload.convnext_eeg import ConvNeXtConfig, ConvNeXtEEG
    from cortexload.sigproc import PreprocessConfig, Task, preprocess
    from cortexload.train_eval import TrainConfig, evaluate, train

    recs = synth_dataset(SynthConfig(subjects=3, duration_s=30.0), seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        epochs, _ = preprocess(recs, PreprocessConfig(task=Task.TERNARY))
    subset = epochs.subset(np.random.default_rng(0).permutation(len(epochs))[:64])
    model = ConvNeXtEEG(ConvNeXtConfig(num_classes=subset.class_count),
                        rng=np.random.default_rng(0))
    started = time.perf_counter()
    _, history = train(model, subset, None, TrainConfig(epochs=200),
                       rng=np.random.default_rng(1))
    elapsed = time.perf_counter() - started
    return {"history": history, "accuracy": evaluate(model, None, subset)[0],
            "elapsed_s": elapsed, "windows": len(subset)}


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
