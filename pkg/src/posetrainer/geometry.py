"""Vector math, torso-length normalization, perspective detection and series smoothing."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .keypoints import (
    INVISIBLE, PART_INDEX, ExerciseKind, InsufficientDataError, Part, Pose, PoseSequence,
)

SMOOTH_WINDOW = 5
SMOOTH_PASSES = 2


class GeometryError(ValueError):
    pass


class DegenerateVectorError(GeometryError):
    pass


class UndefinedTorsoError(GeometryError):
    pass


class NormalizationError(GeometryError):
    pass


class PerspectiveError(GeometryError):
    pass


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"

    @property
    def prefix(self) -> str:
        return {"left": "l", "right": "r"}[self.value]

    def flipped(self) -> "Side":
        return {Side.LEFT: Side.RIGHT, Side.RIGHT: Side.LEFT}.get(self, self)

    def __str__(self) -> str:
        return self.value


class Vec2(NamedTuple):
    dx: float
    dy: float

    @classmethod
    def between(cls, a: Part, b: Part) -> "Vec2":
        return cls(b.x - a.x, b.y - a.y)

    @property
    def norm(self) -> float:
        return math.hypot(self.dx, self.dy)


# Series are plain 1-D float arrays; NaN marks a frame with no defined value.
Series = np.ndarray


def angle_between(u, v) -> float:
    """Unsigned angle between two 2-D vectors, in degrees in [0, 180]."""
    ux, uy = float(u[0]), float(u[1])
    vx, vy = float(v[0]), float(v[1])
    if math.hypot(ux, uy) == 0 or math.hypot(vx, vy) == 0:
        raise DegenerateVectorError("angle undefined for a zero-length vector")
    # atan2 keeps full precision near 0 and 180 where acos does not
    return math.degrees(math.atan2(abs(ux * vy - uy * vx), ux * vx + uy * vy))


def angle_series(u: np.ndarray, v: np.ndarray) -> Series:
    """Row-wise angle_between over (n, 2) arrays; NaN rows propagate."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    dot = u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]
    out = np.degrees(np.arctan2(cross, dot))
    degenerate = (np.hypot(u[:, 0], u[:, 1]) == 0) | (np.hypot(v[:, 0], v[:, 1]) == 0)
    out[degenerate] = np.nan
    return out


def torso_length(p: Pose) -> float:
    """Mean neck-to-hip distance over the visible hips."""
    neck = p.neck
    if not neck.visible:
        raise UndefinedTorsoError("neck not visible")
    hips = [h for h in (p.rhip, p.lhip) if h.visible]
    if not hips:
        raise UndefinedTorsoError("neither hip visible")
    return sum(Vec2.between(neck, h).norm for h in hips) / len(hips)


def torso_lengths(seq: PoseSequence) -> np.ndarray:
    out = np.full(len(seq), np.nan)
    for i, frame in enumerate(seq.frames):
        try:
            out[i] = torso_length(frame)
        except UndefinedTorsoError:
            pass
    return out


def torso_length_spread(lengths) -> float:
    """Relative spread (std / mean) of the defined per-frame torso lengths."""
    lengths = np.asarray(lengths, dtype=float)
    lengths = lengths[np.isfinite(lengths)]
    if lengths.size == 0 or lengths.mean() == 0:
        return float("nan")
    return float(lengths.std() / lengths.mean())


@dataclass(frozen=True)
class NormalizedSequence:
    """Pose frames expressed in torso units.

    ``torso_length_spread`` is the relative spread of per-frame torso lengths
    of the raw input; a rigid subject gives 0.
    """

    frames: tuple
    torso_length_px: float
    side: Side = Side.BOTH
    torso_length_spread: float = 0.0
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.frames)

    def track(self, name: str) -> np.ndarray:
        """(n, 2) coordinates of one joint, NaN where it is not visible."""
        idx = PART_INDEX[name]
        out = np.full((len(self.frames), 2), np.nan)
        for i, frame in enumerate(self.frames):
            part = frame.parts[idx]
            if part.visible:
                out[i] = (part.x, part.y)
        return out

    def visibility(self, name: str) -> float:
        idx = PART_INDEX[name]
        if not self.frames:
            return 0.0
        return sum(f.parts[idx].visible for f in self.frames) / len(self.frames)

    def as_sequence(self) -> PoseSequence:
        return PoseSequence(self.frames, self.source_id)


def _scale_pose(p: Pose, divisor: float) -> Pose:
    parts = tuple(
        Part(q.x / divisor, q.y / divisor, q.confidence) if q.visible else INVISIBLE
        for q in p.parts
    )
    return Pose(parts, p.frame_index)


def normalize_sequence(seq: PoseSequence, exercise: Optional[ExerciseKind] = None,
                       min_fraction: float = 0.5) -> NormalizedSequence:
    """Divide every visible coordinate by the median per-frame torso length.

    With a side-dependent ``exercise`` the active side is detected as well.
    """
    lengths = torso_lengths(seq)
    defined = lengths[np.isfinite(lengths)]
    if len(seq) == 0 or defined.size < min_fraction * len(seq) or defined.size == 0:
        raise NormalizationError(
            f"torso length defined in {defined.size} of {len(seq)} frames; need at least {min_fraction:.0%}"
        )
    divisor = float(np.median(defined))
    if not divisor > 0:
        raise NormalizationError("median torso length is zero")
    side = detect_side(seq, exercise) if exercise is not None else Side.BOTH
    frames = tuple(_scale_pose(f, divisor) for f in seq.frames)
    return NormalizedSequence(frames, divisor, side, torso_length_spread(defined), seq.source_id)


SIDE_DEPENDENT = {ExerciseKind.BICEP_CURL}
_ARM = ("shoulder", "elbow", "wrist")


def detect_side(seq: PoseSequence, exercise: ExerciseKind = ExerciseKind.BICEP_CURL) -> Side:
    """Which arm faces the camera, by total arm-keypoint confidence over all frames.

    Exercises that use both arms get ``Side.BOTH``. Exact ties resolve to right.
    """
    if exercise not in SIDE_DEPENDENT:
        return Side.BOTH
    if len(seq) == 0:
        raise PerspectiveError("cannot detect perspective of an empty sequence")
    conf = seq.as_array()[:, :, 2]
    left = float(conf[:, [PART_INDEX["l" + j] for j in _ARM]].sum())
    right = float(conf[:, [PART_INDEX["r" + j] for j in _ARM]].sum())
    if left == 0 and right == 0:
        raise PerspectiveError("no arm keypoints visible on either side")
    return Side.LEFT if left > right else Side.RIGHT


def facing_direction(seq: NormalizedSequence) -> float:
    """+1 when the subject faces image +x, -1 for -x, from face points relative to the neck/ears."""
    nose, neck = seq.track("nose"), seq.track("neck")
    offsets = (nose - neck)[:, 0]
    offsets = offsets[np.isfinite(offsets)]
    if offsets.size == 0 or np.median(offsets) == 0:
        eyes = np.nanmean(np.stack([seq.track("reye"), seq.track("leye")]), axis=0)
        ears = np.nanmean(np.stack([seq.track("rear"), seq.track("lear")]), axis=0)
        offsets = (eyes - ears)[:, 0]
        offsets = offsets[np.isfinite(offsets)]
    if offsets.size == 0 or np.median(offsets) == 0:
        raise PerspectiveError("cannot tell which way the subject faces")
    return 1.0 if np.median(offsets) > 0 else -1.0


def median_filter(s, window: int = SMOOTH_WINDOW) -> Series:
    """Centered running median with replicate padding at the edges."""
    if isinstance(window, bool) or not isinstance(window, (int, np.integer)) or window < 1 or window % 2 == 0:
        raise ValueError(f"median window must be a positive odd integer, got {window!r}")
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("median_filter needs a non-empty 1-D series")
    half = window // 2
    padded = np.pad(s, half, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, window)
    # odd window: the middle order statistic is an input element, no averaging
    return np.sort(windows, axis=1)[:, half].copy()


def smooth(s, window: int = SMOOTH_WINDOW, passes: int = SMOOTH_PASSES) -> Series:
    out = np.asarray(s, dtype=float)
    for _ in range(passes):
        out = median_filter(out, window)
    return out


def fill_gaps(s) -> Series:
    """Linear interpolation across interior NaNs; edge NaNs take the nearest defined value."""
    s = np.asarray(s, dtype=float)
    defined = np.isfinite(s)
    if defined.sum() < 2:
        raise InsufficientDataError(f"need at least 2 defined values to fill gaps, got {int(defined.sum())}")
    if defined.all():
        return s.copy()
    idx = np.arange(s.size)
    return np.interp(idx, idx[defined], s[defined])


def clean(s, window: int = SMOOTH_WINDOW, passes: int = SMOOTH_PASSES) -> Series:
    """Gap fill then smooth: the standard preparation for every per-frame statistic."""
    return smooth(fill_gaps(s), window, passes)


def mirror_sequence(seq: PoseSequence) -> PoseSequence:
    """Swap left/right joints and negate x: the subject seen in a mirror."""
    swap = {}
    for name, i in PART_INDEX.items():
        if name[0] in "lr":
            other = ("r" if name[0] == "l" else "l") + name[1:]
            if other in PART_INDEX:
                swap[i] = PART_INDEX[other]
    frames = []
    for f in seq.frames:
        parts = [None] * len(f.parts)
        for i, q in enumerate(f.parts):
            parts[swap.get(i, i)] = Part(-q.x, q.y, q.confidence) if q.visible else INVISIBLE
        frames.append(Pose(tuple(parts), f.frame_index))
    return PoseSequence(tuple(frames), seq.source_id, seq.frames_per_second)


def transform_sequence(seq: PoseSequence, scale: float = 1.0, dx: float = 0.0, dy: float = 0.0) -> PoseSequence:
    """Uniformly scale then translate every visible keypoint."""
    frames = tuple(
        Pose(tuple(Part(q.x * scale + dx, q.y * scale + dy, q.confidence) if q.visible else INVISIBLE
                   for q in f.parts), f.frame_index)
        for f in seq.frames
    )
    return PoseSequence(frames, seq.source_id, seq.frames_per_second)
