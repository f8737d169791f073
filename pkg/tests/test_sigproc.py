import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment
from scipy.signal import sawtooth

from cortexload.errors import (ConfigurationError, ConvergenceError, IngestionError,
                               LabelingError, ParseError, RankError, StratificationError)
from cortexload.sigproc import (Condition, DataWarning, EpochSet, FilterSpec, PreprocessConfig,
                                RawRecording, SynthConfig, Task, assign_labels, bandpass, epoch,
                                fastica, load_epoch_set, load_stew, min_max_scale, preprocess,
                                reject_artifacts, save_epoch_set, stratified_holdout,
                                stratified_kfold, stratified_split, synth_dataset, window_count,
                                write_stew)
from cortexload.sigproc.filters import design_sos, magnitude_response

from oracles import (butterworth_bandpass_magnitude, excess_kurtosis, fft_amplitude,
                     naive_window_starts, periodogram_band_power)

FS = 128.0


def mono(x, subject=1, condition=Condition.REST, rating=None):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    names = tuple(f"c{i}" for i in range(x.shape[0]))
    return RawRecording(subject, condition, x, rating=rating, channel_names=names)


def tone(freq, seconds=20.0):
    t = np.arange(int(seconds * FS)) / FS
    return np.sin(2 * np.pi * freq * t)


def core(x):
    # drop the first and last second (filter transients)
    return x[..., int(FS):-int(FS)]


# ingestion

def small_corpus(subjects=3, seconds=2.0, seed=0):
    return synth_dataset(SynthConfig(subjects=subjects, duration_s=seconds), seed=seed)


def test_load_stew_counts_45_subjects(tmp_path):
    write_stew(small_corpus(subjects=45, seconds=1.0), tmp_path)
    with warnings.catch_warnings():
        warnings.simplefilter("error", DataWarning)
        recs = load_stew(tmp_path)
    assert len(recs) == 90
    assert [r.key for r in recs] == sorted([r.key for r in recs], key=lambda k: (k[0], k[1].value))


def test_load_stew_round_trip(tmp_path):
    original = small_corpus()
    write_stew(original, tmp_path)
    loaded = load_stew(tmp_path)
    for a, b in zip(sorted(original, key=lambda r: (r.subject_id, r.condition.value)), loaded):
        assert a.key == b.key and a.rating == b.rating
        np.testing.assert_allclose(b.data, a.data, atol=5e-7)


def test_load_stew_empty_directory_warns(tmp_path):
    with pytest.warns(DataWarning, match="no recordings"):
        assert load_stew(tmp_path) == []


def test_load_stew_wrong_column_count_names_file(tmp_path):
    np.savetxt(tmp_path / "sub01_lo.txt", np.zeros((5, 13)))
    with pytest.raises(ParseError, match=r"sub01_lo\.txt:1") as info:
        load_stew(tmp_path)
    assert "13" in str(info.value)


def test_load_stew_non_numeric_row(tmp_path):
    rows = ["0 " * 14] * 3 + ["0 " * 13 + "x"]
    (tmp_path / "sub02_hi.txt").write_text("\n".join(rows) + "\n")
    with pytest.raises(ParseError, match=r"sub02_hi\.txt:4"):
        load_stew(tmp_path)


def test_load_stew_duplicate_recording(tmp_path):
    np.savetxt(tmp_path / "sub01_lo.txt", np.zeros((4, 14)))
    np.savetxt(tmp_path / "sub1_lo.txt", np.zeros((4, 14)))
    with pytest.raises(IngestionError, match="duplicate"):
        load_stew(tmp_path)


def test_load_stew_missing_rating_kept_and_reported(tmp_path):
    np.savetxt(tmp_path / "sub03_hi.txt", np.zeros((4, 14)))
    (tmp_path / "ratings.txt").write_text("3 rest 2\n")
    with pytest.warns(DataWarning, match="without rating"):
        recs = load_stew(tmp_path)
    assert len(recs) == 1 and recs[0].rating is None


def test_native_ratings_layout(tmp_path):
    np.savetxt(tmp_path / "sub04_lo.txt", np.zeros((4, 14)))
    np.savetxt(tmp_path / "sub04_hi.txt", np.zeros((4, 14)))
    (tmp_path / "ratings.txt").write_text("4, 2, 7\n")
    recs = load_stew(tmp_path)
    assert [r.rating for r in recs] == [2, 7]


# band-pass

def test_filter_sections_match_order():
    assert design_sos(FilterSpec(), FS).shape == (4, 6)


def test_filter_design_matches_closed_form_butterworth():
    freqs = np.linspace(0.1, 63.0, 400)
    ours = magnitude_response(FilterSpec(), FS, freqs)
    ref = butterworth_bandpass_magnitude(freqs, 0.5, 45.0, 4, FS)
    np.testing.assert_allclose(ours, ref, atol=1e-9)


def test_filter_dc_suppressed():
    out = bandpass(mono(np.ones(int(20 * FS)))).data
    assert np.abs(core(out)).max() <= 1e-3


def test_filter_passes_10hz_within_2_percent():
    out = bandpass(mono(tone(10.0))).data[0]
    amp = fft_amplitude(core(out), 10.0, FS)
    assert abs(amp - 1.0) <= 0.02


def test_filter_attenuates_60hz_by_20db():
    out = bandpass(mono(tone(60.0))).data[0]
    amp = fft_amplitude(core(out), 60.0, FS)
    assert 20 * np.log10(amp) <= -20.0
    # two passes square the single-pass magnitude
    single = butterworth_bandpass_magnitude([60.0], 0.5, 45.0, 4, FS)[0]
    assert 40 * np.log10(single) <= -20.0


def test_zero_phase_has_no_lag():
    x = tone(10.0)
    y = bandpass(mono(x)).data[0]
    a, b = core(x), core(y)
    lags = np.arange(-6, 7)
    xc = [np.dot(a[6:-6], np.roll(b, -lag)[6:-6]) for lag in lags]
    assert lags[int(np.argmax(xc))] == 0


def test_filter_spec_validation():
    with pytest.raises(ConfigurationError):
        FilterSpec(0.5, 70.0).validate(FS)
    with pytest.raises(ConfigurationError):
        FilterSpec(order=3).validate(FS)


# FastICA

def matched_correlations(truth, estimate):
    c = np.abs(np.corrcoef(truth, estimate)[:len(truth), len(truth):])
    rows, cols = linear_sum_assignment(-c)
    return c[rows, cols]


def test_fastica_identity_mixing(rng):
    t = np.arange(8192) / FS
    s = np.vstack([np.sign(np.sin(2 * np.pi * 1.3 * t)), sawtooth(2 * np.pi * 3 * t),
                   rng.uniform(-1, 1, t.size)])
    s = (s - s.mean(axis=1, keepdims=True)) / s.std(axis=1, keepdims=True)
    result = fastica(s, rng=np.random.default_rng(0))
    assert matched_correlations(s, result.sources).min() >= 0.99


@pytest.mark.parametrize("trial", range(10))
def test_fastica_sine_sawtooth_mixture(trial):
    rng = np.random.default_rng(100 + trial)
    t = np.arange(4096) / FS
    s = np.vstack([np.sin(2 * np.pi * 7 * t), sawtooth(2 * np.pi * 3 * t)])
    a = rng.normal(size=(2, 2))
    result = fastica(a @ s, rng=rng)
    assert matched_correlations(s, result.sources).min() >= 0.95
    # mixing and unmixing invert each other on the component space
    np.testing.assert_allclose(result.unmixing @ result.mixing, np.eye(2), atol=1e-8)


def test_fastica_constant_channel_is_rank_error(rng):
    x = np.vstack([rng.normal(size=1000), np.full(1000, 3.0)])
    with pytest.raises(RankError):
        fastica(x)


def test_fastica_reports_non_convergence(rng):
    with pytest.raises(ConvergenceError) as info:
        fastica(rng.normal(size=(4, 2000)), max_iter=2, tol=1e-14)
    assert info.value.delta > 0


def spiky_recording(rng):
    t = np.arange(8192) / FS
    spikes = np.zeros(t.size)
    spikes[rng.choice(t.size, 30, replace=False)] = rng.choice([-1, 1], 30) * 25.0
    s = np.vstack([np.sin(2 * np.pi * 7 * t), sawtooth(2 * np.pi * 3 * t), spikes])
    a = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    return mono(a @ s), s, a


def test_reject_artifacts_removes_spike_component(rng):
    rec, s, a = spiky_recording(rng)
    assert excess_kurtosis(s[2]) > 20
    result = fastica(rec.data, rng=np.random.default_rng(0))
    cleaned, rejected = reject_artifacts(rec, result, kurtosis_threshold=8.0)
    assert len(rejected) == 1
    spike_like = int(np.argmax([abs(np.corrcoef(s[2], c)[0, 1]) for c in result.sources]))
    assert rejected == [spike_like]
    assert excess_kurtosis(result.sources[rejected[0]]) == pytest.approx(
        excess_kurtosis(s[2]), rel=0.05)
    clean = a[:, :2] @ s[:2]
    for ch in range(3):
        assert np.corrcoef(cleaned.data[ch], clean[ch])[0, 1] >= 0.99


def test_reject_artifacts_infinite_threshold_round_trips(rng):
    rec, _, _ = spiky_recording(rng)
    result = fastica(rec.data, rng=np.random.default_rng(0))
    cleaned, rejected = reject_artifacts(rec, result, kurtosis_threshold=np.inf)
    assert rejected == []
    np.testing.assert_allclose(cleaned.data, rec.data, atol=1e-8)


# scaling and windowing

def test_min_max_example():
    np.testing.assert_array_equal(min_max_scale(mono([2.0, 4.0, 6.0])).data, [[0.0, 0.5, 1.0]])


def test_min_max_constant_channel_warns():
    with pytest.warns(DataWarning, match="flat"):
        out = min_max_scale(mono([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]))
    np.testing.assert_array_equal(out.data[1], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=200))
def test_min_max_range_and_idempotence(values):
    x = np.array(values)
    if np.ptp(x) == 0:
        return
    once = min_max_scale(mono(x)).data
    assert once.min() == 0.0 and once.max() == 1.0
    np.testing.assert_allclose(min_max_scale(mono(once)).data, once, atol=1e-15)


@pytest.mark.parametrize("n,expected", [(19200, 299), (128, 1), (191, 1), (192, 2)])
def test_window_counts(n, expected):
    assert window_count(n) == expected
    assert len(epoch(np.zeros((14, n)))) == expected


@settings(max_examples=60, deadline=None)
@given(st.integers(128, 4000), st.integers(1, 200))
def test_window_formula_matches_enumeration(n, hop):
    starts = naive_window_starts(n, 128, hop)
    assert window_count(n, 128, hop) == len(starts)


def test_epoch_contents_follow_hop():
    x = np.arange(14 * 300, dtype=float).reshape(14, 300)
    w = epoch(x)
    for i, s in enumerate(naive_window_starts(300, 128, 64)):
        np.testing.assert_array_equal(w[i], x[:, s:s + 128])


def test_short_recording_gives_no_windows():
    with pytest.warns(DataWarning, match="shorter"):
        assert epoch(np.zeros((14, 100))).shape == (0, 14, 128)


# labels and the full pipeline

def test_binary_labels_on_paper_scale_corpus(stew_corpus):
    es = assign_labels(stew_corpus, Task.BINARY)
    assert len(es) == 26910
    assert es.class_counts().tolist() == [13455, 13455]
    assert es.window_shape == (1, 14, 128)


def test_ternary_uses_task_recordings_only(stew_corpus):
    es = assign_labels(stew_corpus, Task.TERNARY)
    assert len(es) == 299 * 45
    assert set(es.conditions.tolist()) == {"task"}


@pytest.mark.parametrize("rating,cls", [(1, 0), (3, 0), (4, 1), (5, 1), (6, 1), (7, 2), (9, 2)])
def test_ternary_binning(rating, cls):
    rec = RawRecording(1, Condition.TASK, np.zeros((14, 256)), rating=rating)
    assert set(assign_labels([rec], Task.TERNARY).labels.tolist()) == {cls}


def test_ternary_missing_rating_lists_subjects():
    recs = [RawRecording(s, Condition.TASK, np.zeros((14, 256))) for s in (4, 9)]
    with pytest.raises(LabelingError, match=r"\[4, 9\]"):
        assign_labels(recs, Task.TERNARY)


def test_rest_recording_contributes_nothing_to_ternary():
    rec = RawRecording(1, Condition.REST, np.zeros((14, 512)), rating=2)
    assert len(assign_labels([rec], Task.TERNARY)) == 0


def test_preprocess_is_scaled_windows(stew_corpus):
    es, _ = preprocess(stew_corpus[:4], PreprocessConfig())
    assert len(es) == 4 * 299
    assert es.windows.min() >= 0.0 and es.windows.max() <= 1.0
    assert es.provenance[0] == (stew_corpus[0].subject_id, stew_corpus[0].condition.value, 0)


def test_ica_with_infinite_threshold_is_a_no_op(stew_corpus):
    recs = stew_corpus[:2]
    plain, _ = preprocess(recs, PreprocessConfig())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DataWarning)
        ica, log = preprocess(recs, PreprocessConfig(ica=True, kurtosis_threshold=np.inf))
    assert log.rejected_components == {}
    np.testing.assert_allclose(ica.windows, plain.windows, atol=1e-8)


def test_epoch_set_round_trip(tmp_path, stew_corpus):
    es = assign_labels(stew_corpus[:2], Task.BINARY)
    save_epoch_set(es, tmp_path, {"note": "x"})
    back = load_epoch_set(tmp_path)
    np.testing.assert_array_equal(back.windows, es.windows)
    np.testing.assert_array_equal(back.labels, es.labels)
    assert back.provenance == es.provenance


def test_epoch_set_rejects_bad_labels():
    with pytest.raises(ConfigurationError):
        EpochSet(np.zeros((1, 1, 14, 128)), [2], [1], ["rest"], [0], 2)


# splits

def labelled(counts):
    return np.concatenate([np.full(c, k) for k, c in enumerate(counts)])


def test_split_exact_70_15_15():
    y = labelled([100, 100])
    parts = stratified_split(y, seed=3)
    for cls in (0, 1):
        assert [int(np.sum(y[p] == cls)) for p in parts] == [70, 15, 15]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(3, 60), min_size=2, max_size=4), st.integers(0, 2**32 - 1))
def test_split_is_a_stratified_partition(counts, seed):
    y = labelled(counts)
    parts = stratified_split(y, seed=seed)
    joined = np.sort(np.concatenate(parts))
    np.testing.assert_array_equal(joined, np.arange(len(y)))
    for cls, n in enumerate(counts):
        for p, r in zip(parts, (0.70, 0.15, 0.15)):
            assert abs(np.sum(y[p] == cls) - r * n) < 1.0 + 1e-9 or n < 7


def test_split_determinism():
    y = labelled([50, 50])
    a, b = stratified_split(y, seed=1), stratified_split(y, seed=1)
    c = stratified_split(y, seed=2)
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert not all(np.array_equal(u, v) for u, v in zip(a, c))


def test_split_needs_three_per_class():
    with pytest.raises(StratificationError):
        stratified_split(labelled([10, 2]))


def test_split_by_subject_keeps_groups_together():
    y = labelled([60, 60])
    groups = np.repeat(np.arange(12), 10)
    parts = stratified_split(y, seed=0, groups=groups)
    owners = [set(groups[p].tolist()) for p in parts]
    assert not (owners[0] & owners[1] or owners[0] & owners[2] or owners[1] & owners[2])


def test_kfold_balanced_example():
    y = labelled([10, 10])
    folds = stratified_kfold(y, 5, seed=0)
    assert len(folds) == 5
    for _, test in folds:
        assert np.bincount(y[test]).tolist() == [2, 2]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(5, 40), min_size=2, max_size=3), st.integers(2, 5),
       st.integers(0, 2**32 - 1))
def test_kfold_partition(counts, k, seed):
    y = labelled(counts)
    folds = stratified_kfold(y, k, seed)
    tests = np.concatenate([te for _, te in folds])
    np.testing.assert_array_equal(np.sort(tests), np.arange(len(y)))
    for tr, te in folds:
        assert len(np.intersect1d(tr, te)) == 0 and len(tr) + len(te) == len(y)
        for cls, n in enumerate(counts):
            assert abs(np.sum(y[te] == cls) - n / k) < 1.0


def test_kfold_imbalanced_counts():
    y = labelled([7, 13])
    for _, te in stratified_kfold(y, 5, seed=4):
        assert abs(np.sum(y[te] == 0) - 7 / 5) < 1 and abs(np.sum(y[te] == 1) - 13 / 5) < 1


def test_kfold_too_few():
    with pytest.raises(StratificationError):
        stratified_kfold(labelled([4, 10]), 5)


def test_holdout_fraction():
    keep, held = stratified_holdout(labelled([100, 40]), 0.15, seed=0)
    y = labelled([100, 40])
    assert np.bincount(y[held]).tolist() == [15, 6]
    assert len(np.intersect1d(keep, held)) == 0 and len(keep) + len(held) == 140


# synthetic data

def test_synth_deterministic():
    a, b = small_corpus(seed=5), small_corpus(seed=5)
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a, b))
    c = small_corpus(seed=6)
    assert not np.array_equal(a[0].data, c[0].data)


def test_synth_shapes_and_ratings():
    recs = synth_dataset(SynthConfig(subjects=3, duration_s=150.0), seed=0)
    assert len(recs) == 6
    assert all(r.data.shape == (14, 19200) for r in recs)
    assert [r.rating for r in recs if r.condition is Condition.TASK] == [2, 5, 8]


def test_synth_alpha_power_falls_with_class():
    recs = synth_dataset(SynthConfig(subjects=3, duration_s=60.0), seed=2)
    task = [r for r in recs if r.condition is Condition.TASK]
    power = [periodogram_band_power(r.data, FS, 8.0, 12.0).mean() for r in task]
    assert power[0] > power[1] > power[2]
    assert power[0] / power[2] >= 2.0
