"""Synthetic keypoint sequences with known ground-truth form.

Joint angles are specified directly, so the statistics the evaluators report
are known in advance. Side views place both arms at the same image position
and attenuate the confidence of the arm facing away from the camera.

Angles use an image-plane direction convention: 0 deg points down the image
(+y), 90 deg points the way the subject faces, 180 deg points up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .heuristics import Verdict
from .keypoints import NUM_PARTS, PART_INDEX, Pose, PoseSequence


@dataclass(frozen=True)
class Body:
    """Segment lengths in torso units and placement in pixels."""

    torso_px: float = 200.0
    neck: Tuple[float, float] = (320.0, 140.0)
    upper_arm: float = 0.6
    forearm: float = 0.55
    shoulder_drop: float = 0.05
    shoulder_half_width: float = 0.35
    hip_half_width: float = 0.2
    thigh: float = 0.8
    shin: float = 0.8


def _dir(phi_deg: float, facing: float) -> np.ndarray:
    phi = math.radians(phi_deg)
    return np.array([facing * math.sin(phi), math.cos(phi)])


def _pose_from(points: dict, confidences: dict, frame_index: int) -> Pose:
    arr = np.zeros((NUM_PARTS, 3))
    for name, xy in points.items():
        c = confidences.get(name, 0.95)
        if c > 0:
            arr[PART_INDEX[name]] = (xy[0], xy[1], c)
    return Pose.from_array(arr, frame_index)


def side_view_pose(body: Body, facing: float, lean: float, arm: Sequence[float], elbow: Sequence[float],
                   active: str = "r", off_conf: float = 0.95, frame_index: int = 0) -> Pose:
    """One side-view frame.

    ``lean`` tilts the torso (positive = shoulders ahead of hips), ``arm`` is
    the upper-arm angle from the torso line for (right, left), ``elbow`` the
    interior elbow angle for (right, left); 180 is a straight arm.
    """
    L = body.torso_px
    neck = np.array(body.neck, dtype=float)
    down = _dir(lean, facing)
    hip = neck + L * down
    shoulder = neck + L * body.shoulder_drop * down
    pts = {"neck": neck, "rhip": hip, "lhip": hip}
    for s, a, e in zip("rl", arm, elbow):
        upper = _dir(lean + a, facing)
        el = shoulder + L * body.upper_arm * upper
        pts[s + "shoulder"], pts[s + "elbow"] = shoulder, el
        pts[s + "wrist"] = el + L * body.forearm * _dir(lean + a + 180.0 - e, facing)
    head = neck - 0.22 * L * down
    pts["nose"] = head + 0.12 * L * _dir(lean + 90.0, facing)
    pts["reye"] = pts["leye"] = head + 0.08 * L * _dir(lean + 90.0, facing) - 0.03 * L * down
    pts["rear"] = pts["lear"] = head - 0.04 * L * _dir(lean + 90.0, facing)
    for s in "rl":
        pts[s + "knee"] = hip + L * body.thigh * np.array([0.0, 1.0])
        pts[s + "ankle"] = pts[s + "knee"] + L * body.shin * np.array([0.0, 1.0])
    off = "l" if active == "r" else "r"
    conf = {off + j: off_conf for j in ("shoulder", "elbow", "wrist", "hip", "knee", "ankle", "eye", "ear")}
    return _pose_from(pts, conf, frame_index)


def front_view_pose(body: Body, lift: Sequence[float], arm: Sequence[float], elbow: Sequence[float],
                    frame_index: int = 0) -> Pose:
    """One frame facing the camera. ``lift`` raises each shoulder (torso units); arms hang and bend sideways."""
    L = body.torso_px
    neck = np.array(body.neck, dtype=float)
    pts = {"neck": neck}
    for s, sign, up, a, e in zip("rl", (-1.0, 1.0), lift, arm, elbow):
        # subject's right appears on the image left
        outward = sign
        shoulder = neck + L * np.array([sign * body.shoulder_half_width, body.shoulder_drop - up])
        el = shoulder + L * body.upper_arm * _dir(a, outward)
        pts[s + "shoulder"], pts[s + "elbow"] = shoulder, el
        pts[s + "wrist"] = el + L * body.forearm * _dir(a - (180.0 - e), outward)
        hip = neck + L * np.array([sign * body.hip_half_width, math.sqrt(1 - body.hip_half_width ** 2)])
        pts[s + "hip"] = hip
        pts[s + "knee"] = hip + L * body.thigh * np.array([0.0, 1.0])
        pts[s + "ankle"] = pts[s + "knee"] + L * body.shin * np.array([0.0, 1.0])
        pts[s + "eye"] = neck + L * np.array([sign * 0.05, -0.3])
        pts[s + "ear"] = neck + L * np.array([sign * 0.1, -0.27])
    pts["nose"] = neck + L * np.array([0.0, -0.25])
    return _pose_from(pts, {}, frame_index)


def rep_profile(n_frames: int, reps: int = 2, hold: int = 7, rest: int = 6) -> np.ndarray:
    """Values in [0, 1] for ``reps`` repetitions: rest, smooth rise, hold at 1, smooth fall.

    Holds and rests of at least 5 frames survive the size-5 median filter, so
    the extremes 0 and 1 are preserved exactly by smoothing.
    """
    cycle = n_frames / reps
    move = (cycle - hold - rest) / 2
    if move < 1:
        raise ValueError("too few frames for the requested reps, hold and rest")
    out = np.empty(n_frames)
    for i in range(n_frames):
        t = i % cycle
        t -= rest / 2
        if t < 0:
            v = 0.0
        elif t < move:
            v = 0.5 - 0.5 * math.cos(math.pi * t / move)
        elif t < move + hold:
            v = 1.0
        elif t < 2 * move + hold:
            v = 0.5 + 0.5 * math.cos(math.pi * (t - move - hold) / move)
        else:
            v = 0.0
        out[i] = v
    return out


def bicep_curl(n_frames: int = 60, reps: int = 2, swing: float = 10.0, min_elbow: float = 40.0,
               rest_arm: float = 3.0, rest_elbow: float = 170.0, side: str = "right",
               off_conf: float = 0.1, body: Body = Body(), source_id: str = "bicep",
               profile: Optional[np.ndarray] = None) -> PoseSequence:
    """Side-view curl: upper-arm/torso angle spans [rest_arm, rest_arm + swing], elbow spans [min_elbow, rest_elbow]."""
    p = rep_profile(n_frames, reps) if profile is None else np.asarray(profile)
    facing = 1.0 if side == "right" else -1.0
    active = "r" if side == "right" else "l"
    frames = []
    for i, v in enumerate(p):
        a = rest_arm + swing * v
        e = rest_elbow - (rest_elbow - min_elbow) * v
        frames.append(side_view_pose(body, facing, 0.0, (a, a), (e, e), active, off_conf, i))
    return PoseSequence(tuple(frames), source_id)


def front_raise(n_frames: int = 60, reps: int = 2, top_angle: float = 100.0, lean: float = 1.0,
                body: Body = Body(), source_id: str = "front_raise") -> PoseSequence:
    """Side view, both arms straight, raised from 10 deg to ``top_angle``; the torso leans back by ``lean`` deg at the top."""
    p = rep_profile(n_frames, reps)
    frames = []
    for i, v in enumerate(p):
        a = 10.0 + (top_angle - 10.0) * v
        frames.append(side_view_pose(body, 1.0, -lean * v, (a, a), (175.0, 175.0), "r", 0.95, i))
    return PoseSequence(tuple(frames), source_id)


def shoulder_shrug(n_frames: int = 60, reps: int = 2, lift: float = 0.12, min_elbow: float = 172.0,
                   body: Body = Body(), source_id: str = "shrug") -> PoseSequence:
    p = rep_profile(n_frames, reps)
    frames = []
    for i, v in enumerate(p):
        e = 178.0 - (178.0 - min_elbow) * v
        frames.append(front_view_pose(body, (lift * v, lift * v), (8.0, 8.0), (e, e), i))
    return PoseSequence(tuple(frames), source_id)


def shoulder_press(n_frames: int = 60, reps: int = 2, top_elbow: float = 170.0, top_arm: float = 165.0,
                   lean: float = 1.0, body: Body = Body(), source_id: str = "press") -> PoseSequence:
    """Side view: upper arm from 100 deg to ``top_arm`` (past 180 puts the elbow behind the neck)."""
    p = rep_profile(n_frames, reps)
    frames = []
    for i, v in enumerate(p):
        a = 100.0 + (top_arm - 100.0) * v
        e = 80.0 + (top_elbow - 80.0) * v
        frames.append(side_view_pose(body, 1.0, -lean * v, (a, a), (e, e), "r", 0.95, i))
    return PoseSequence(tuple(frames), source_id)


def add_noise(seq: PoseSequence, rng: np.random.Generator, sigma: float = 0.01, spike_rate: float = 0.01,
              spike_size: Tuple[float, float] = (0.3, 1.0), torso_px: Optional[float] = None) -> PoseSequence:
    """Gaussian jitter (``sigma`` torso units) on visible keypoints, plus displaced outlier keypoints.

    Each visible keypoint observation is independently replaced by a spike with
    probability ``spike_rate``; spikes move it ``spike_size`` torso units in a
    random direction.
    """
    arr = seq.as_array().copy()
    if torso_px is None:
        from .geometry import torso_lengths
        torso_px = float(np.nanmedian(torso_lengths(seq)))
    visible = arr[:, :, 2] > 0
    noise = rng.normal(0.0, sigma * torso_px, size=arr[:, :, :2].shape)
    arr[:, :, :2] += noise * visible[:, :, None]
    spikes = visible & (rng.random(visible.shape) < spike_rate)
    k = int(spikes.sum())
    if k:
        theta = rng.uniform(0, 2 * math.pi, k)
        r = rng.uniform(*spike_size, k) * torso_px
        arr[spikes, 0] += r * np.cos(theta)
        arr[spikes, 1] += r * np.sin(theta)
    return PoseSequence.from_array(arr, seq.source_id, seq.frames_per_second)


@dataclass(frozen=True)
class BicepSample:
    sequence: PoseSequence
    label: Verdict
    swing: float
    min_elbow: float
    side: str


def bicep_dataset(n_correct: int = 20, n_incorrect: int = 20, seed: int = 0, sigma: float = 0.01,
                  spike_rate: float = 0.01, reps: int = 2) -> List[BicepSample]:
    """Labeled synthetic curls for the classification experiment.

    Correct curls swing the upper arm 4-18 deg and reach an elbow angle of
    30-55 deg. Incorrect ones swing 40-60 deg, stop at 85-110 deg, or both.
    Every clip holds ``reps`` repetitions; length (45-75 frames, i.e. tempo),
    arm side, body size and placement vary per sequence.
    """
    rng = np.random.default_rng(seed)
    samples = []
    for k in range(n_correct + n_incorrect):
        correct = k < n_correct
        if correct:
            swing, min_elbow = rng.uniform(4, 18), rng.uniform(30, 55)
        else:
            fault = ("swing", "partial", "both")[k % 3]
            swing = rng.uniform(40, 60) if fault in ("swing", "both") else rng.uniform(4, 18)
            min_elbow = rng.uniform(85, 110) if fault in ("partial", "both") else rng.uniform(30, 55)
        side = "right" if rng.random() < 0.5 else "left"
        n_frames = int(rng.integers(45, 76))
        body = Body(torso_px=float(rng.uniform(120, 260)),
                    neck=(float(rng.uniform(200, 440)), float(rng.uniform(80, 200))))
        label = Verdict.CORRECT if correct else Verdict.INCORRECT
        name = f"bicep_{'good' if correct else 'bad'}_{k:02d}"
        seq = bicep_curl(n_frames, reps, swing, min_elbow, side=side, off_conf=0.2, body=body, source_id=name)
        seq = add_noise(seq, rng, sigma, spike_rate, torso_px=body.torso_px)
        samples.append(BicepSample(seq, label, swing, min_elbow, side))
    return samples


def write_frame_files(seq: PoseSequence, folder, prefix: str = "frame") -> List:
    """Write one estimator-style JSON document per frame (zero-padded names)."""
    import json
    from pathlib import Path

    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    paths = []
    for f in seq.frames:
        flat = [float(v) for v in f.as_array().reshape(-1)]
        doc = {"version": 1.3, "people": [{"person_id": [-1], "pose_keypoints_2d": flat}]}
        path = folder / f"{prefix}_{f.frame_index:012d}_keypoints.json"
        path.write_text(json.dumps(doc))
        paths.append(path)
    return paths
