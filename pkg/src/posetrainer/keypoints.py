"""Typed pose sequences: estimator output parsing and the internal sequence file."""

from __future__ import annotations

import enum
import json
import logging
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

log = logging.getLogger(__name__)

# COCO-18 order, as written by the estimator's COCO body model.
PART_NAMES = (
    "nose", "neck",
    "rshoulder", "relbow", "rwrist",
    "lshoulder", "lelbow", "lwrist",
    "rhip", "rknee", "rankle",
    "lhip", "lknee", "lankle",
    "reye", "leye", "rear", "lear",
)
PART_INDEX = {name: i for i, name in enumerate(PART_NAMES)}
NUM_PARTS = len(PART_NAMES)

SCHEMA_VERSION = 1
OPENPOSE_ENV_VAR = "POSETRAINER_OPENPOSE_BIN"

PathLike = Union[str, os.PathLike]


class PoseDataError(ValueError):
    """Base class for ingestion failures."""


class PoseParseError(PoseDataError):
    pass


class EmptyFrameError(PoseParseError):
    """Frame file is well formed but contains no person."""


class InsufficientDataError(PoseDataError):
    pass


class SchemaVersionError(PoseParseError):
    pass


class EstimatorError(RuntimeError):
    pass


class ExerciseKind(str, enum.Enum):
    BICEP_CURL = "bicep_curl"
    FRONT_RAISE = "front_raise"
    SHOULDER_SHRUG = "shoulder_shrug"
    SHOULDER_PRESS = "shoulder_press"

    @classmethod
    def parse(cls, name: str) -> "ExerciseKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            known = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown exercise {name!r} (expected one of: {known})") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Part:
    """One keypoint. A part with zero confidence is invisible and pinned to (0, 0)."""

    x: float
    y: float
    confidence: float

    def __post_init__(self):
        if self.confidence <= 0:
            object.__setattr__(self, "x", 0.0)
            object.__setattr__(self, "y", 0.0)
            object.__setattr__(self, "confidence", 0.0)

    @property
    def visible(self) -> bool:
        return self.confidence > 0


INVISIBLE = Part(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Pose:
    parts: tuple
    frame_index: int = 0

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) != NUM_PARTS:
            raise ValueError(f"a pose has exactly {NUM_PARTS} parts, got {len(parts)}")
        object.__setattr__(self, "parts", parts)

    def part(self, name: str) -> Part:
        return self.parts[PART_INDEX[name]]

    def __getattr__(self, name):
        # named accessors: pose.neck, pose.lwrist, ...
        if name in PART_INDEX:
            return self.parts[PART_INDEX[name]]
        raise AttributeError(name)

    def as_array(self) -> np.ndarray:
        """(18, 3) array of x, y, confidence."""
        return np.array([(p.x, p.y, p.confidence) for p in self.parts], dtype=float)

    @classmethod
    def from_array(cls, values, frame_index: int = 0) -> "Pose":
        values = np.asarray(values, dtype=float).reshape(NUM_PARTS, 3)
        return cls(tuple(Part(float(x), float(y), float(c)) for x, y, c in values), frame_index)

    def with_index(self, frame_index: int) -> "Pose":
        return Pose(self.parts, frame_index)


@dataclass(frozen=True)
class PoseSequence:
    frames: tuple
    source_id: str = ""
    frames_per_second: Optional[float] = None

    def __post_init__(self):
        frames = tuple(self.frames)
        for i, frame in enumerate(frames):
            if frame.frame_index != i:
                raise ValueError(f"frame indices must be contiguous from 0; position {i} has {frame.frame_index}")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def as_array(self) -> np.ndarray:
        """(n_frames, 18, 3) array."""
        if not self.frames:
            return np.zeros((0, NUM_PARTS, 3))
        return np.stack([f.as_array() for f in self.frames])

    @classmethod
    def from_array(cls, values, source_id: str = "", frames_per_second: Optional[float] = None) -> "PoseSequence":
        values = np.asarray(values, dtype=float)
        frames = tuple(Pose.from_array(v, i) for i, v in enumerate(values))
        return cls(frames, source_id, frames_per_second)


def _person_keypoints(person) -> np.ndarray:
    if not isinstance(person, dict) or "pose_keypoints_2d" not in person:
        raise PoseParseError("person entry lacks 'pose_keypoints_2d'")
    flat = person["pose_keypoints_2d"]
    if not isinstance(flat, list) or len(flat) != 3 * NUM_PARTS:
        n = len(flat) if isinstance(flat, list) else type(flat).__name__
        raise PoseParseError(f"expected {3 * NUM_PARTS} keypoint numbers, got {n}")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in flat):
        raise PoseParseError("keypoint array contains non-numeric values")
    arr = np.asarray(flat, dtype=float).reshape(NUM_PARTS, 3)
    if not np.all(np.isfinite(arr)):
        raise PoseParseError("keypoint array contains non-finite values")
    conf = arr[:, 2]
    if np.any(conf < 0) or np.any(conf > 1):
        raise PoseParseError("keypoint confidence outside [0, 1]")
    return arr


def parse_frame_file(content: Union[str, bytes], frame_index: int = 0) -> Pose:
    """Parse one estimator frame document into a Pose.

    When several people are present, the one with the largest summed
    confidence is kept.
    """
    if isinstance(content, (bytes, bytearray)):
        try:
            content = content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise PoseParseError(f"frame file is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(content)
    except (json.JSONDecodeError, RecursionError) as exc:
        raise PoseParseError(f"malformed frame file: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("people"), list):
        raise PoseParseError("frame file has no 'people' list")
    if not doc["people"]:
        raise EmptyFrameError("no person detected in frame")

    people = [_person_keypoints(p) for p in doc["people"]]
    best = max(range(len(people)), key=lambda i: (people[i][:, 2].sum(), -i))
    return Pose.from_array(people[best], frame_index)


def load_sequence(frame_files: Sequence[PathLike], source_id: str = "",
                  frames_per_second: Optional[float] = None) -> PoseSequence:
    """Build a sequence from per-frame files, in the order given.

    Frames without a detected person are dropped with a warning.
    """
    frames = []
    for path in frame_files:
        try:
            pose = parse_frame_file(Path(path).read_bytes())
        except EmptyFrameError:
            log.warning("dropping frame with no detected person: %s", path)
            continue
        frames.append(pose.with_index(len(frames)))
    if len(frames) < 2:
        raise InsufficientDataError(
            f"need at least 2 frames with a detected person, got {len(frames)} from {len(frame_files)} file(s)"
        )
    return PoseSequence(tuple(frames), source_id, frames_per_second)


def load_directory(folder: PathLike, pattern: str = "*.json", source_id: Optional[str] = None) -> PoseSequence:
    folder = Path(folder)
    if not folder.is_dir():
        raise FileNotFoundError(f"keypoint folder not found: {folder}")
    files = sorted(folder.glob(pattern), key=lambda p: p.name)
    return load_sequence(files, source_id if source_id is not None else folder.name)


def sequence_to_record(seq: PoseSequence) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "pose_sequence",
        "source_id": seq.source_id,
        "frames_per_second": seq.frames_per_second,
        "parts": list(PART_NAMES),
        "frames": [[[p.x, p.y, p.confidence] for p in f.parts] for f in seq.frames],
    }


def sequence_from_record(doc) -> PoseSequence:
    if not isinstance(doc, dict):
        raise PoseParseError("sequence document must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported sequence schema version {version!r} (expected {SCHEMA_VERSION})")
    if doc.get("kind") != "pose_sequence":
        raise PoseParseError("document is not a pose sequence")
    try:
        frames = tuple(
            Pose(tuple(Part(float(x), float(y), float(c)) for x, y, c in parts), i)
            for i, parts in enumerate(doc["frames"])
        )
        fps = doc.get("frames_per_second")
        return PoseSequence(frames, str(doc.get("source_id", "")), None if fps is None else float(fps))
    except (KeyError, TypeError, ValueError) as exc:
        raise PoseParseError(f"malformed sequence document: {exc}") from None


def save_sequence(seq: PoseSequence, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(json.dumps(sequence_to_record(seq)))
    return path


def load_saved(path: PathLike) -> PoseSequence:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PoseParseError(f"malformed sequence file {path}: {exc}") from None
    return sequence_from_record(doc)


def is_saved_sequence(path: PathLike) -> bool:
    path = Path(path)
    if not path.is_file():
        return False
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError):
        return False
    return isinstance(doc, dict) and doc.get("kind") == "pose_sequence"


def load_any(path: PathLike, pattern: str = "*.json") -> PoseSequence:
    """Load a saved sequence file or a directory of estimator frame files."""
    path = Path(path)
    if path.is_dir():
        return load_directory(path, pattern)
    if path.is_file():
        seq = load_saved(path)
        if not seq.source_id:
            seq = PoseSequence(seq.frames, path.stem, seq.frames_per_second)
        return seq
    raise FileNotFoundError(f"no such sequence file or folder: {path}")


def resolve_estimator(executable: Optional[PathLike] = None) -> Path:
    candidate = executable or os.environ.get(OPENPOSE_ENV_VAR)
    if not candidate:
        raise EstimatorError(f"no pose estimator configured; pass --openpose_bin or set {OPENPOSE_ENV_VAR}")
    found = shutil.which(str(candidate))
    if found is None:
        raise EstimatorError(f"pose estimator executable not found: {candidate}")
    return Path(found)


def run_estimator(video: PathLike, executable: Optional[PathLike] = None,
                  extra_args: Iterable[str] = (), timeout: Optional[float] = None) -> PoseSequence:
    """Run the external estimator on a video and ingest its per-frame output."""
    video = Path(video)
    if not video.is_file():
        raise FileNotFoundError(f"video not found: {video}")
    exe = resolve_estimator(executable)
    with tempfile.TemporaryDirectory(prefix="posetrainer_") as tmp:
        cmd = [str(exe), "--video", str(video), "--write_json", tmp,
               "--display", "0", "--render_pose", "0", "--model_pose", "COCO", *extra_args]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
        except OSError as exc:
            raise EstimatorError(f"could not start pose estimator: {exc}") from None
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout).strip().splitlines()[-1:] or ["no output"]
            raise EstimatorError(f"pose estimator exited with status {proc.returncode}: {tail[0]}")
        return load_directory(tmp, "*.json", source_id=video.stem)
