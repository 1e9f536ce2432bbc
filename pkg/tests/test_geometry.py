import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from oracles import double_median, sorted_window_median
from posetrainer import geometry as geo, synthetic
from posetrainer.geometry import Side
from posetrainer.keypoints import INVISIBLE, ExerciseKind, InsufficientDataError, Part, Pose, PoseSequence


@pytest.mark.parametrize("u, v, expected", [
    ((1, 0), (0, 1), 90.0),
    ((1, 0), (1, 0), 0.0),
    ((1, 0), (-1, 0), 180.0),
    ((1, 0), (1, 1), 45.0),
])
def test_angle_examples(u, v, expected):
    assert geo.angle_between(u, v) == pytest.approx(expected, abs=1e-12)


def test_angle_zero_vector():
    with pytest.raises(geo.DegenerateVectorError):
        geo.angle_between((0, 0), (1, 0))


finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = st.tuples(finite, finite).filter(lambda v: math.hypot(*v) > 1e-3)


@given(vectors, vectors, st.floats(1e-2, 1e2), st.floats(1e-2, 1e2), st.floats(-math.pi, math.pi))
def test_angle_symmetry_scaling_rotation(u, v, a, b, theta):
    base = geo.angle_between(u, v)
    assert 0.0 <= base <= 180.0
    assert geo.angle_between(v, u) == base
    assert geo.angle_between((a * u[0], a * u[1]), (b * v[0], b * v[1])) == pytest.approx(base, abs=1e-9)
    c, s = math.cos(theta), math.sin(theta)
    rot = lambda w: (c * w[0] - s * w[1], s * w[0] + c * w[1])
    assert geo.angle_between(rot(u), rot(v)) == pytest.approx(base, abs=1e-9)


def test_angle_series_matches_scalar(rng):
    u, v = rng.normal(size=(50, 2)), rng.normal(size=(50, 2))
    expected = [geo.angle_between(a, b) for a, b in zip(u, v)]
    assert np.allclose(geo.angle_series(u, v), expected, atol=1e-12)


def pose_with(**points):
    parts = [INVISIBLE] * 18
    from posetrainer.keypoints import PART_INDEX
    for name, (x, y) in points.items():
        parts[PART_INDEX[name]] = Part(x, y, 0.9)
    return Pose(tuple(parts))


def test_torso_length_examples():
    assert geo.torso_length(pose_with(neck=(0, 0), rhip=(30, 40), lhip=(-30, 40))) == 50.0
    assert geo.torso_length(pose_with(neck=(0, 0), rhip=(0, 100))) == 100.0
    with pytest.raises(geo.UndefinedTorsoError):
        geo.torso_length(pose_with(rhip=(0, 100), lhip=(5, 100)))
    with pytest.raises(geo.UndefinedTorsoError):
        geo.torso_length(pose_with(neck=(0, 0)))


def test_normalize_scale_invariance(good_curl):
    a = geo.normalize_sequence(good_curl)
    b = geo.normalize_sequence(geo.transform_sequence(good_curl, scale=2.0))
    assert b.torso_length_px == 2 * a.torso_length_px
    assert np.array_equal(a.as_sequence().as_array(), b.as_sequence().as_array())


def test_normalized_upper_arm_ratio():
    # 80 px torso, 48 px upper arm -> 0.6 torso units
    frames = tuple(pose_with(neck=(100, 100), rhip=(100, 180), lhip=(100, 180),
                             rshoulder=(100, 100), relbow=(100, 148)).with_index(i) for i in range(4))
    n = geo.normalize_sequence(PoseSequence(frames))
    assert n.torso_length_px == 80.0
    upper = n.track("relbow") - n.track("rshoulder")
    assert np.allclose(np.hypot(upper[:, 0], upper[:, 1]), 0.6)


def test_normalize_requires_torso():
    frames = tuple(pose_with(neck=(0, 0), rshoulder=(1, 1)).with_index(i) for i in range(3))
    with pytest.raises(geo.NormalizationError):
        geo.normalize_sequence(PoseSequence(frames))


def test_normalize_idempotent(good_curl):
    once = geo.normalize_sequence(good_curl)
    twice = geo.normalize_sequence(once.as_sequence())
    assert twice.torso_length_px == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(once.as_sequence().as_array(), twice.as_sequence().as_array(), atol=1e-9)


def test_invisible_parts_untouched(good_curl):
    n = geo.normalize_sequence(good_curl)
    for raw, norm in zip(good_curl.frames, n.frames):
        for p, q in zip(raw.parts, norm.parts):
            assert p.visible == q.visible
            if not p.visible:
                assert (q.x, q.y) == (0.0, 0.0)


def test_rigid_subject_has_zero_torso_spread(good_curl, rng):
    assert geo.normalize_sequence(good_curl).torso_length_spread == pytest.approx(0.0, abs=1e-12)
    noisy = synthetic.add_noise(good_curl, rng, sigma=0.05, spike_rate=0.0)
    assert geo.normalize_sequence(noisy).torso_length_spread > 0.01


def _arm_conf_sequence(left, right, n=5):
    from posetrainer.keypoints import PART_INDEX
    arr = np.zeros((n, 18, 3))
    arr[:, :, :2] = 1.0
    arr[:, :, 2] = 0.5
    for j in ("shoulder", "elbow", "wrist"):
        arr[:, PART_INDEX["l" + j], 2] = left
        arr[:, PART_INDEX["r" + j], 2] = right
    return PoseSequence.from_array(arr)


def test_detect_side_examples():
    seq = _arm_conf_sequence(0.9, 0.1)
    assert geo.detect_side(seq, ExerciseKind.BICEP_CURL) is Side.LEFT
    assert geo.detect_side(geo.mirror_sequence(seq), ExerciseKind.BICEP_CURL) is Side.RIGHT
    assert geo.detect_side(_arm_conf_sequence(0.4, 0.4), ExerciseKind.BICEP_CURL) is Side.RIGHT
    with pytest.raises(geo.PerspectiveError):
        geo.detect_side(_arm_conf_sequence(0.0, 0.0), ExerciseKind.BICEP_CURL)
    assert geo.detect_side(seq, ExerciseKind.SHOULDER_SHRUG) is Side.BOTH


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_detect_side_flips_under_mirror(left, right):
    assume(left != right)
    seq = _arm_conf_sequence(left, right)
    assert geo.detect_side(geo.mirror_sequence(seq)) is geo.detect_side(seq).flipped()


def test_median_filter_examples():
    assert list(geo.median_filter([0, 0, 100, 0, 0], 5)) == [0, 0, 0, 0, 0]
    assert list(geo.median_filter([3.5] * 4)) == [3.5] * 4
    assert list(geo.median_filter([1, 2, 3, 4, 5], 3)) == sorted_window_median([1, 2, 3, 4, 5], 3) == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("window", [0, -1, 2, 4, 2.0])
def test_median_filter_bad_window(window):
    with pytest.raises(ValueError):
        geo.median_filter([1.0, 2.0, 3.0], window)


def test_median_filter_empty():
    with pytest.raises(ValueError):
        geo.median_filter([])


series = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40)


@given(series, st.sampled_from([1, 3, 5, 7, 9]))
def test_median_filter_matches_oracle(values, window):
    out = geo.median_filter(values, window)
    assert out.tolist() == sorted_window_median(values, window)
    assert set(out.tolist()) <= set(values)
    assert min(values) <= out.min() and out.max() <= max(values)


def test_smooth_examples(rng):
    assert list(geo.smooth([2.0] * 6)) == [2.0] * 6
    assert list(geo.smooth([0, 0, 100, 0, 0])) == [0, 0, 0, 0, 0]
    values = rng.normal(size=30).tolist()
    assert geo.smooth(values).tolist() == double_median(values)


def test_fill_gaps_examples():
    nan = float("nan")
    assert geo.fill_gaps([1, nan, 3]).tolist() == [1, 2, 3]
    assert geo.fill_gaps([nan, 5, 7]).tolist() == [5, 5, 7]
    assert geo.fill_gaps([1, 2, nan, nan]).tolist() == [1, 2, 2, 2]
    with pytest.raises(InsufficientDataError):
        geo.fill_gaps([nan, nan])
    with pytest.raises(InsufficientDataError):
        geo.fill_gaps([nan, 4.0, nan])


def test_facing_direction():
    right = geo.normalize_sequence(synthetic.bicep_curl(side="right"))
    left = geo.normalize_sequence(synthetic.bicep_curl(side="left"))
    assert geo.facing_direction(right) == 1.0
    assert geo.facing_direction(left) == -1.0
