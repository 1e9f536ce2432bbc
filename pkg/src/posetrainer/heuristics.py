"""Per-exercise geometric form checks with threshold rules and user feedback."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Sequence

import numpy as np

from .geometry import (
    NormalizedSequence, PerspectiveError, Side, angle_series, clean, detect_side, facing_direction,
)
from .keypoints import ExerciseKind, InsufficientDataError

SUCCESS_HEADER = "Exercise performed correctly!"
IMPROVE_HEADER = "Exercise could be improved:"

FEEDBACK = {
    "bicep_curl.upper_arm_range": (
        "Your upper arm shows significant rotation around the shoulder when curling. Try holding your "
        "upper arm still, parallel to your chest, and concentrate on rotating around your elbow only."
    ),
    "bicep_curl.curl_angle": (
        "You are not curling the weight all the way up. Bend fully at the elbow and bring the weight "
        "up towards your shoulder."
    ),
    "front_raise.back_sway": (
        "Your back shows significant movement. Try keeping your back straight and still when you lift "
        "the weight. Consider using lighter weight."
    ),
    "front_raise.raise_angle": (
        "You are not lifting the weight all the way up. Finish with wrists at or slightly above shoulder level."
    ),
    "shoulder_shrug.shrug_range": (
        "Your shoulders do not go through enough motion. Squeeze and raise your shoulders more through "
        "the exercise."
    ),
    "shoulder_shrug.straight_arm": (
        "Your arms are bending when lifting. Keep your arms straight and still, and focus on moving only "
        "the shoulders."
    ),
    "shoulder_press.back_sway": (
        "Your back shows significant movement while pressing. Try keeping your back straight and still "
        "when you lift the weight."
    ),
    "shoulder_press.elbow_back": (
        "You are rolling your shoulders when you lift the weights. Try to steady your shoulders and keep "
        "them parallel."
    ),
    "shoulder_press.lockout_angle": (
        "You are not lifting the weight all the way up. Extend your arms through the full range of motion. "
        "Lower the weight if necessary."
    ),
}

SUCCESS = {
    ExerciseKind.BICEP_CURL: (
        "Exercise performed correctly! Weight was lifted fully up, and upper arm did not move significantly."
    ),
    ExerciseKind.FRONT_RAISE: (
        "Exercise performed correctly! Weights were raised to shoulder level, and the back stayed still."
    ),
    ExerciseKind.SHOULDER_SHRUG: (
        "Exercise performed correctly! Shoulders moved through a full range, and arms stayed straight."
    ),
    ExerciseKind.SHOULDER_PRESS: (
        "Exercise performed correctly! Arms were fully extended, the back stayed still, and elbows stayed "
        "in front of the body."
    ),
}


class EvaluationError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class Verdict(str, enum.Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"

    def __str__(self) -> str:
        return self.value


_COMPARATORS: Dict[str, Callable[[float, float], bool]] = {
    "<=": lambda s, t: s <= t,
    "<": lambda s, t: s < t,
    ">=": lambda s, t: s >= t,
}


@dataclass(frozen=True)
class ThresholdConfig:
    """Rule thresholds. Only the two bicep values come from measured data; the rest are defaults."""

    bicep_upper_arm_range: float = 35.0     # degrees, fail if range exceeds
    bicep_curl_angle: float = 70.0          # degrees, fail unless min goes below
    front_raise_back_sway: float = 0.15     # torso units
    front_raise_raise_angle: float = 90.0   # degrees
    shrug_range: float = 0.08               # torso units
    shrug_straight_arm: float = 150.0       # degrees
    press_back_sway: float = 0.15           # torso units
    press_elbow_back: float = 0.05          # torso units
    press_lockout_angle: float = 150.0      # degrees

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"threshold {f.name} must be a finite number, got {value!r}")
            if f.name in _ANGLE_FIELDS and not 0 < value < 180:
                raise ConfigError(f"angle threshold {f.name} must lie in (0, 180), got {value}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ThresholdConfig":
        """Build from ``exercise.rule`` keys; keys outside the threshold namespace are ignored."""
        kwargs = {}
        for key, raw in values.items():
            exercise = key.split(".", 1)[0]
            if exercise not in {k.value for k in ExerciseKind}:
                continue
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown threshold key {key!r}")
            try:
                kwargs[CONFIG_KEYS[key]] = float(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"threshold {key} is not a number: {raw!r}") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ThresholdConfig":
        return cls.from_mapping(read_config_file(path))

    def to_mapping(self) -> Dict[str, float]:
        return {key: getattr(self, name) for key, name in CONFIG_KEYS.items()}


CONFIG_KEYS = {
    "bicep_curl.upper_arm_range": "bicep_upper_arm_range",
    "bicep_curl.curl_angle": "bicep_curl_angle",
    "front_raise.back_sway": "front_raise_back_sway",
    "front_raise.raise_angle": "front_raise_raise_angle",
    "shoulder_shrug.shrug_range": "shrug_range",
    "shoulder_shrug.straight_arm": "shrug_straight_arm",
    "shoulder_press.back_sway": "press_back_sway",
    "shoulder_press.elbow_back": "press_elbow_back",
    "shoulder_press.lockout_angle": "press_lockout_angle",
}
_ANGLE_FIELDS = {
    "bicep_upper_arm_range", "bicep_curl_angle", "front_raise_raise_angle",
    "shrug_straight_arm", "press_lockout_angle",
}


def read_config_file(path) -> Dict[str, str]:
    """Read ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out: Dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


@dataclass(frozen=True)
class RuleResult:
    rule_id: str
    label: str
    statistic: float
    unit: str
    threshold: float
    comparator: str
    passed: bool
    feedback: str = ""

    def __post_init__(self):
        expected = _COMPARATORS[self.comparator](self.statistic, self.threshold)
        if expected != self.passed:
            raise ValueError(f"rule {self.rule_id}: passed={self.passed} contradicts "
                             f"{self.statistic} {self.comparator} {self.threshold}")

    @property
    def line(self) -> str:
        return f"{self.label}: {self.statistic!r}"


def check(rule_id: str, label: str, statistic: float, unit: str, threshold: float, comparator: str) -> RuleResult:
    statistic = float(statistic)
    passed = _COMPARATORS[comparator](statistic, threshold)
    return RuleResult(rule_id, label, statistic, unit, float(threshold), comparator, passed,
                      "" if passed else FEEDBACK[rule_id])


@dataclass
class Evaluation:
    exercise: ExerciseKind
    side: Side
    rules: List[RuleResult]
    source_id: str = ""
    series_dump: Dict[str, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    @property
    def verdict(self) -> Verdict:
        return Verdict.CORRECT if all(r.passed for r in self.rules) else Verdict.INCORRECT

    @property
    def feedback(self) -> List[str]:
        return [r.feedback for r in self.rules if not r.passed]

    @property
    def messages(self) -> List[str]:
        if self.verdict is Verdict.CORRECT:
            return [SUCCESS_HEADER, SUCCESS[self.exercise]]
        return [IMPROVE_HEADER, *self.feedback]

    def transcript_lines(self) -> List[str]:
        lines = []
        if self.side is not Side.BOTH:
            lines.append(f"Exercise arm detected as: {self.side.value}.")
        lines.extend(r.line for r in self.rules)
        lines.extend(self.messages)
        return lines

    def to_record(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "evaluation",
            "source_id": self.source_id,
            "exercise": self.exercise.value,
            "side": self.side.value,
            "verdict": self.verdict.value,
            "rules": [asdict(r) for r in self.rules],
            "messages": self.messages,
            "series": sorted(self.series_dump),
        }

    @classmethod
    def from_record(cls, doc: Mapping) -> "Evaluation":
        if doc.get("schema_version") != 1 or doc.get("kind") != "evaluation":
            raise ValueError("not a version-1 evaluation record")
        ev = cls(
            exercise=ExerciseKind(doc["exercise"]),
            side=Side(doc["side"]),
            rules=[RuleResult(**r) for r in doc["rules"]],
            source_id=doc.get("source_id", ""),
        )
        if ev.verdict.value != doc["verdict"] or ev.messages != list(doc["messages"]):
            raise ValueError("evaluation record is internally inconsistent")
        return ev


def _nanmean_rows(arrays: Sequence[np.ndarray]) -> np.ndarray:
    stack = np.stack(arrays)
    count = np.isfinite(stack).sum(axis=0)
    total = np.where(np.isfinite(stack), stack, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), np.nan)


class _Series:
    """Collects raw and cleaned series for one evaluation."""

    def __init__(self):
        self.dump: Dict[str, np.ndarray] = {}

    def add(self, name: str, raw: np.ndarray) -> np.ndarray:
        try:
            smoothed = clean(raw)
        except InsufficientDataError:
            raise EvaluationError(f"series {name!r} has fewer than 2 frames with the required keypoints") from None
        self.dump[f"{name}_raw"] = np.asarray(raw, dtype=float)
        self.dump[name] = smoothed
        return smoothed


def _require(seq: NormalizedSequence, joints: Sequence[str], min_fraction: float) -> None:
    missing = [j for j in joints if seq.visibility(j) < min_fraction or
               sum(f.part(j).visible for f in seq.frames) < 2]
    if missing:
        raise EvaluationError(
            f"required keypoints not visible in enough frames (need {min_fraction:.0%}): {', '.join(missing)}"
        )


def _usable_arms(seq: NormalizedSequence, min_fraction: float) -> List[str]:
    arms = [s for s in "rl" if all(
        seq.visibility(s + j) >= min_fraction and sum(f.part(s + j).visible for f in seq.frames) >= 2
        for j in ("shoulder", "elbow", "wrist"))]
    if not arms:
        raise EvaluationError(
            f"no arm with shoulder, elbow and wrist visible in at least {min_fraction:.0%} of frames"
        )
    return arms


def _hip_midpoint(seq: NormalizedSequence) -> np.ndarray:
    return _nanmean_rows([seq.track("rhip"), seq.track("lhip")])


def _require_trunk(seq: NormalizedSequence, min_fraction: float) -> np.ndarray:
    _require(seq, ["neck"], min_fraction)
    hips = _hip_midpoint(seq)
    if np.isfinite(hips[:, 0]).mean() < min_fraction:
        raise EvaluationError(f"required keypoints not visible in enough frames (need {min_fraction:.0%}): rhip, lhip")
    return hips


def _elbow_angle(seq: NormalizedSequence, s: str) -> np.ndarray:
    shoulder, elbow, wrist = (seq.track(s + j) for j in ("shoulder", "elbow", "wrist"))
    return angle_series(shoulder - elbow, wrist - elbow)


def _back_sway(neck: np.ndarray, hips: np.ndarray, series: _Series) -> float:
    offset = series.add("back_horizontal_offset", neck[:, 0] - hips[:, 0])
    return float(np.max(np.abs(offset - offset[0])))


def evaluate_bicep_curl(seq: NormalizedSequence, cfg: ThresholdConfig = ThresholdConfig()) -> Evaluation:
    side = seq.side
    if side is Side.BOTH:
        side = detect_side(seq.as_sequence(), ExerciseKind.BICEP_CURL)
    s = side.prefix
    _require(seq, ["neck", f"{s}shoulder", f"{s}elbow", f"{s}wrist"], 0.0)

    own_hip, other_hip = seq.track(f"{s}hip"), seq.track(("l" if s == "r" else "r") + "hip")
    hip = np.where(np.isfinite(own_hip), own_hip, other_hip)
    torso = hip - seq.track("neck")
    upper_arm = seq.track(f"{s}elbow") - seq.track(f"{s}shoulder")

    series = _Series()
    arm_torso = series.add("upper_arm_torso_angle", angle_series(upper_arm, torso))
    elbow = series.add("upper_arm_forearm_angle", _elbow_angle(seq, s))

    rules = [
        check("bicep_curl.upper_arm_range", "Upper arm and torso angle range",
              np.max(arm_torso) - np.min(arm_torso), "deg", cfg.bicep_upper_arm_range, "<="),
        check("bicep_curl.curl_angle", "Upper arm and forearm minimum angle",
              np.min(elbow), "deg", cfg.bicep_curl_angle, "<"),
    ]
    return Evaluation(ExerciseKind.BICEP_CURL, side, rules, seq.source_id, series.dump)


def evaluate_front_raise(seq: NormalizedSequence, cfg: ThresholdConfig = ThresholdConfig(),
                         min_fraction: float = 0.5) -> Evaluation:
    """Back sway against the maximum torso-to-arm angle (arm = shoulder to wrist, averaged over visible arms)."""
    hips = _require_trunk(seq, min_fraction)
    arms = _usable_arms(seq, min_fraction)
    neck = seq.track("neck")
    torso = hips - neck

    series = _Series()
    sway = _back_sway(neck, hips, series)
    raise_angle = series.add("torso_arm_angle", _nanmean_rows(
        [angle_series(seq.track(s + "wrist") - seq.track(s + "shoulder"), torso) for s in arms]))

    rules = [
        check("front_raise.back_sway", "Back horizontal range", sway, "torso", cfg.front_raise_back_sway, "<="),
        check("front_raise.raise_angle", "Torso and arm maximum angle", np.max(raise_angle), "deg",
              cfg.front_raise_raise_angle, ">="),
    ]
    return Evaluation(ExerciseKind.FRONT_RAISE, Side.BOTH, rules, seq.source_id, series.dump)


def evaluate_shoulder_shrug(seq: NormalizedSequence, cfg: ThresholdConfig = ThresholdConfig(),
                            min_fraction: float = 0.5) -> Evaluation:
    """Vertical shoulder range (mean over visible shoulders) and the smallest elbow angle of either arm."""
    arms = _usable_arms(seq, min_fraction)
    series = _Series()
    ranges, elbows = [], []
    for s in arms:
        y = series.add(f"{s}shoulder_y", seq.track(s + "shoulder")[:, 1])
        ranges.append(np.max(y) - np.min(y))
        elbows.append(np.min(series.add(f"{s}_upper_arm_forearm_angle", _elbow_angle(seq, s))))

    rules = [
        check("shoulder_shrug.shrug_range", "Shoulder vertical range", np.mean(ranges), "torso",
              cfg.shrug_range, ">="),
        check("shoulder_shrug.straight_arm", "Upper arm and forearm minimum angle", min(elbows), "deg",
              cfg.shrug_straight_arm, ">="),
    ]
    return Evaluation(ExerciseKind.SHOULDER_SHRUG, Side.BOTH, rules, seq.source_id, series.dump)


def evaluate_shoulder_press(seq: NormalizedSequence, cfg: ThresholdConfig = ThresholdConfig(),
                            min_fraction: float = 0.5) -> Evaluation:
    """Back sway, how far either elbow travels behind the neck, and the peak mean elbow angle.

    "Behind" is measured against the facing direction read off the face keypoints.
    """
    hips = _require_trunk(seq, min_fraction)
    arms = _usable_arms(seq, min_fraction)
    try:
        facing = facing_direction(seq)
    except PerspectiveError as exc:
        raise EvaluationError(str(exc)) from None
    neck = seq.track("neck")

    series = _Series()
    sway = _back_sway(neck, hips, series)
    behind = max(
        np.max(series.add(f"{s}elbow_behind_neck", -(seq.track(s + "elbow")[:, 0] - neck[:, 0]) * facing))
        for s in arms
    )
    lockout = series.add("upper_arm_forearm_angle", _nanmean_rows([_elbow_angle(seq, s) for s in arms]))

    rules = [
        check("shoulder_press.back_sway", "Back horizontal range", sway, "torso", cfg.press_back_sway, "<="),
        check("shoulder_press.elbow_back", "Elbow maximum distance behind neck", behind, "torso",
              cfg.press_elbow_back, "<="),
        check("shoulder_press.lockout_angle", "Upper arm and forearm maximum angle", np.max(lockout), "deg",
              cfg.press_lockout_angle, ">="),
    ]
    return Evaluation(ExerciseKind.SHOULDER_PRESS, Side.BOTH, rules, seq.source_id, series.dump)


EVALUATORS = {
    ExerciseKind.BICEP_CURL: evaluate_bicep_curl,
    ExerciseKind.FRONT_RAISE: evaluate_front_raise,
    ExerciseKind.SHOULDER_SHRUG: evaluate_shoulder_shrug,
    ExerciseKind.SHOULDER_PRESS: evaluate_shoulder_press,
}


def evaluate(seq: NormalizedSequence, exercise: ExerciseKind, cfg: ThresholdConfig = ThresholdConfig()) -> Evaluation:
    return EVALUATORS[ExerciseKind(exercise)](seq, cfg)
