from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_dtw, euclid
from posetrainer import classifier as clf, geometry as geo, synthetic
from posetrainer.classifier import (
    CORRECT, INCORRECT, Example, FeatureConfig, FeatureSeries, LabeledDataset, SplitError,
)
from posetrainer.keypoints import PART_INDEX, ExerciseKind, PoseSequence

B = ExerciseKind.BICEP_CURL


def fs(values, source_id="", exercise=B):
    return FeatureSeries(np.asarray(values, dtype=float), exercise, source_id)


def features(seq, exercise=B):
    return clf.featurize(geo.normalize_sequence(seq, exercise), exercise)


# featurize

def test_feature_dimensions():
    assert features(synthetic.bicep_curl()).dim == 10
    assert features(synthetic.front_raise(), ExerciseKind.FRONT_RAISE).dim == 18
    assert features(synthetic.shoulder_shrug(), ExerciseKind.SHOULDER_SHRUG).dim == 18


def test_motionless_pose_gives_identical_vectors():
    still = synthetic.bicep_curl(n_frames=10, profile=np.zeros(10))
    f = features(still)
    assert len(f) == 10
    assert np.all(f.values == f.values[0])


def test_translation_gives_identical_features(good_curl):
    a = features(good_curl)
    b = features(geo.transform_sequence(good_curl, 1.0, 37.0, -12.0))
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_single_spike_is_filtered():
    profile = np.r_[np.zeros(8), np.ones(8), np.zeros(8)]
    clean = synthetic.bicep_curl(n_frames=24, profile=profile)
    arr = clean.as_array()
    arr[4, PART_INDEX["rwrist"], :2] += (150.0, -90.0)
    spiked = PoseSequence.from_array(arr, clean.source_id)
    assert np.array_equal(features(spiked).values, features(clean).values)


def test_left_and_right_curls_share_orientation():
    r = features(synthetic.bicep_curl(side="right"))
    l = features(synthetic.bicep_curl(side="left"))
    assert np.allclose(r.values, l.values, atol=1e-9)


def test_featurize_missing_joint():
    arr = synthetic.bicep_curl().as_array()
    arr[:, PART_INDEX["rwrist"], 2] = 0.0
    with pytest.raises(clf.FeaturizationError, match="rwrist"):
        features(PoseSequence.from_array(arr))


def test_feature_config_digest_tracks_changes(tmp_path):
    base = FeatureConfig()
    assert FeatureConfig.from_mapping({}).digest() == base.digest()
    assert FeatureConfig.from_mapping({"features.window": "3"}).digest() != base.digest()
    changed = FeatureConfig.from_mapping({"features.bicep_curl": "shoulder, elbow, wrist"})
    assert changed.joints["bicep_curl"] == ("shoulder", "elbow", "wrist")
    assert changed.digest() != base.digest()


# dtw

@pytest.mark.parametrize("q, c, expected", [
    ([0.0], [0.0, 0.0, 0.0], 0.0),
    ([0.0, 0.0], [1.0, 1.0], 2.0),
    ([1.0, 2.0, 3.0], [1.0, 2.0, 2.0, 3.0], 0.0),
])
def test_dtw_examples(q, c, expected):
    # expected values come from brute_force_dtw over all alignment paths
    assert brute_force_dtw(q, c) == expected
    assert clf.dtw_distance(q, c) == expected


def test_dtw_identity(rng):
    q = rng.normal(size=(12, 4))
    assert clf.dtw_distance(q, q) == 0.0


def test_dtw_errors():
    with pytest.raises(ValueError, match="dimensionality"):
        clf.dtw_distance(np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        clf.dtw_distance(np.zeros((0, 2)), np.zeros((3, 2)))


def test_pairwise_distances_match_scalar_formula(rng):
    q, c = rng.normal(size=(5, 7)), rng.normal(size=(6, 7))
    d = clf.pairwise_distances(q, c)
    assert all(d[i, j] == euclid(q[i], c[j]) for i in range(5) for j in range(6))


small = st.floats(-100, 100, allow_nan=False)


@st.composite
def series_pair(draw, max_len=6):
    d = draw(st.integers(1, 3))
    m, n = draw(st.integers(1, max_len)), draw(st.integers(1, max_len))
    row = st.lists(small, min_size=d, max_size=d)
    return (np.array(draw(st.lists(row, min_size=m, max_size=m))),
            np.array(draw(st.lists(row, min_size=n, max_size=n))))


@given(series_pair())
def test_dtw_equals_brute_force(pair):
    q, c = pair
    assert clf.dtw_distance(q, c) == brute_force_dtw(q, c)


@given(series_pair(max_len=10))
def test_dtw_metric_properties(pair):
    q, c = pair
    d = clf.dtw_distance(q, c)
    assert d >= 0
    assert d == clf.dtw_distance(c, q)
    if len(q) == len(c):
        assert d <= sum(euclid(a, b) for a, b in zip(q, c))


# classify

def test_classify_exact_match():
    train = LabeledDataset([Example(fs([[0.0], [1.0]], "a"), CORRECT, "a"),
                            Example(fs([[5.0], [5.0]], "b"), INCORRECT, "b")])
    pred = clf.classify(fs([[0.0], [1.0]]), train)
    assert (pred.label, pred.distance, pred.source_id) == (CORRECT, 0.0, "a")


def test_classify_nearest_wins():
    train = LabeledDataset([Example(fs([[3.0]]), INCORRECT, "near"), Example(fs([[7.0]]), CORRECT, "far")])
    assert clf.classify(fs([[0.0]]), train).label is INCORRECT


def test_classify_tie_goes_to_incorrect():
    a, b = Example(fs([[1.0]]), CORRECT, "a"), Example(fs([[-1.0]]), INCORRECT, "b")
    for order in ([a, b], [b, a]):
        pred = clf.classify(fs([[0.0]]), LabeledDataset(order))
        assert (pred.label, pred.source_id) == (INCORRECT, "b")


@given(st.permutations(range(6)))
def test_classify_order_invariant(perm):
    values = [0.5, 2.0, -1.0, 0.5, 3.0, -0.5]
    entries = [Example(fs([[v], [v + 1]]), CORRECT if i % 2 else INCORRECT, f"e{i}") for i, v in enumerate(values)]
    query = fs([[0.4], [1.3]])
    base = clf.classify(query, LabeledDataset(entries))
    assert clf.classify(query, LabeledDataset([entries[i] for i in perm])) == base


def test_classify_errors():
    with pytest.raises(clf.DatasetError):
        clf.classify(fs([[0.0]]), LabeledDataset([]))
    train = LabeledDataset([Example(fs([[0.0]], exercise=ExerciseKind.FRONT_RAISE), CORRECT, "a")])
    with pytest.raises(clf.DatasetError, match="front_raise"):
        clf.classify(fs([[0.0]]), train)


# metrics and split

def test_metrics_from_counts():
    # correct class: TP=2, FP=1, FN=0
    truth = [CORRECT, CORRECT, INCORRECT]
    pred = [CORRECT, CORRECT, CORRECT]
    m = clf.compute_metrics(truth, pred).per_class[CORRECT]
    assert m.precision == pytest.approx(2 / 3)
    assert m.recall == 1.0
    assert m.f1 == pytest.approx(0.8)
    assert m.support == 2


def test_metrics_perfect_twelve():
    truth = [CORRECT] * 6 + [INCORRECT] * 6
    m = clf.compute_metrics(truth, truth)
    lines = m.format_table().splitlines()
    assert lines[-1].split() == ["Avg/Total", "1.00", "1.00", "1.00", "12"]
    assert lines[1].split() == ["Correct", "1.00", "1.00", "1.00", "6"]


def test_metrics_single_class():
    truth = [CORRECT] * 3
    pred = [CORRECT, CORRECT, INCORRECT]
    m = clf.compute_metrics(truth, pred)
    assert m.per_class[INCORRECT].support == 0
    present = m.per_class[CORRECT]
    assert m.average.support == 3
    for attr in ("precision", "recall", "f1"):
        assert getattr(m.average, attr) == pytest.approx(getattr(present, attr))


def test_table_one_bicep_row_arithmetic():
    # 4 correct, 3 incorrect, one incorrect predicted correct
    truth = [CORRECT] * 4 + [INCORRECT] * 3
    pred = [CORRECT] * 5 + [INCORRECT] * 2
    m = clf.compute_metrics(truth, pred)
    assert m.format_table().splitlines()[1:] == [
        "Correct           0.80      1.00      0.89         4",
        "Incorrect         1.00      0.67      0.80         3",
        "Avg/Total         0.89      0.86      0.85         7",
    ]


@given(st.lists(st.tuples(st.sampled_from([CORRECT, INCORRECT]), st.sampled_from([CORRECT, INCORRECT])),
                min_size=1, max_size=30))
def test_metric_invariants(pairs):
    truth, pred = zip(*pairs)
    m = clf.compute_metrics(truth, pred)
    assert sum(c.support for c in m.per_class.values()) == len(truth) == m.average.support
    for c in [*m.per_class.values(), m.average]:
        assert 0 <= c.precision <= 1 and 0 <= c.recall <= 1 and 0 <= c.f1 <= 1
    for c in m.per_class.values():
        p, r = c.precision, c.recall
        assert c.f1 == pytest.approx(2 * p * r / (p + r) if p + r else 0.0)


def toy_dataset(n_good=5, n_bad=5):
    entries = [Example(fs([[0.0], [float(i) / 10]], f"good_{i}"), CORRECT, f"good_{i}") for i in range(n_good)]
    entries += [Example(fs([[5.0], [5.0 + i / 10]], f"bad_{i}"), INCORRECT, f"bad_{i}") for i in range(n_bad)]
    return LabeledDataset(entries)


def test_split_is_stratified_and_reproducible():
    data = toy_dataset()
    train, test = clf.stratified_split(data, 3, 0.6)
    assert sorted(e.label.value for e in train).count("correct") == 3
    assert len(test) == 4
    assert clf.evaluate_split(data, 3, 0.6).to_record() == clf.evaluate_split(data, 3, 0.6).to_record()
    assert clf.evaluate_split(data, 3, 0.6).average.f1 == 1.0


def test_split_errors():
    with pytest.raises(SplitError, match="training"):
        clf.evaluate_split(toy_dataset(2, 2), 0, 0.1)
    with pytest.raises(SplitError, match="test portion is empty"):
        clf.evaluate_split(toy_dataset(3, 1), 0, 0.99)
    with pytest.raises(SplitError):
        clf.evaluate_split(toy_dataset(4, 0), 0, 0.5)


# labels and manifests

@pytest.mark.parametrize("name, label", [
    ("bicep_good_1.mp4", CORRECT), ("shrug_good_3", CORRECT), ("bicep_bad_1", INCORRECT),
    ("press-bad-2.json", INCORRECT), ("clip_7", None), ("goodness_1", None),
])
def test_infer_label(name, label):
    assert clf.infer_label(name) == label


def test_read_manifest(tmp_path):
    manifest = tmp_path / "m.txt"
    manifest.write_text("# path, label, exercise\na.json, correct, bicep_curl\n/abs/b.json bad shoulder_press\n\n")
    recs = clf.read_manifest(manifest)
    assert [(r.path, r.label, r.exercise) for r in recs] == [
        (tmp_path / "a.json", CORRECT, B),
        (Path("/abs/b.json"), INCORRECT, ExerciseKind.SHOULDER_PRESS),
    ]
    manifest.write_text("a.json, maybe, bicep_curl\n")
    with pytest.raises(clf.DatasetError):
        clf.read_manifest(manifest)
