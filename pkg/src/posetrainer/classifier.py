"""DTW nearest-neighbour classification of feature series and the split/metrics harness."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .geometry import SMOOTH_PASSES, SMOOTH_WINDOW, NormalizedSequence, Side, clean
from .heuristics import Verdict
from .keypoints import ExerciseKind, InsufficientDataError

CORRECT, INCORRECT = Verdict.CORRECT, Verdict.INCORRECT
LABELS = (CORRECT, INCORRECT)


class FeaturizationError(ValueError):
    pass


class SplitError(ValueError):
    pass


class DatasetError(ValueError):
    pass


_BOTH_ARMS = ("rshoulder", "relbow", "rwrist", "lshoulder", "lelbow", "lwrist", "neck", "rhip", "lhip")


@dataclass(frozen=True)
class FeatureConfig:
    """Which joints go into the feature vector, and how channels are smoothed.

    Bicep joints are side-relative names (``shoulder`` means the detected arm's
    shoulder); the others are absolute joint names.
    """

    joints: Mapping[str, Tuple[str, ...]] = field(default_factory=lambda: {
        ExerciseKind.BICEP_CURL.value: ("shoulder", "elbow", "wrist", "neck", "hip"),
        ExerciseKind.FRONT_RAISE.value: _BOTH_ARMS,
        ExerciseKind.SHOULDER_SHRUG.value: _BOTH_ARMS,
        ExerciseKind.SHOULDER_PRESS.value: _BOTH_ARMS,
    })
    window: int = SMOOTH_WINDOW
    passes: int = SMOOTH_PASSES

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "FeatureConfig":
        """Read ``features.window``, ``features.passes`` and ``features.<exercise>`` keys."""
        base = cls()
        joints = dict(base.joints)
        window, passes = base.window, base.passes
        for key, raw in values.items():
            if not key.startswith("features."):
                continue
            name = key[len("features."):]
            if name == "window":
                window = int(raw)
            elif name == "passes":
                passes = int(raw)
            elif name in joints:
                joints[name] = tuple(str(raw).replace(",", " ").split())
            else:
                raise ValueError(f"unknown feature key {key!r}")
        return cls(joints, window, passes)

    def to_dict(self) -> dict:
        return {"joints": {k: list(v) for k, v in sorted(self.joints.items())},
                "window": self.window, "passes": self.passes}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureSeries:
    values: np.ndarray          # (n_frames, d)
    exercise: ExerciseKind
    source_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("feature series must be (frames, dims)")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature series contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def _resolve_joints(names: Sequence[str], side: Side) -> List[str]:
    out = []
    for name in names:
        if name in ("shoulder", "elbow", "wrist", "hip", "knee", "ankle", "eye", "ear"):
            out.append(side.prefix + name)
        else:
            out.append(name)
    return out


def featurize(seq: NormalizedSequence, exercise: ExerciseKind,
              config: Optional[FeatureConfig] = None) -> FeatureSeries:
    """Neck-relative torso-unit coordinates of the exercise's joints, gap filled and smoothed.

    For the one-armed exercise a left-side recording is mirrored in x so both
    sides share one orientation.
    """
    config = config or FeatureConfig()
    exercise = ExerciseKind(exercise)
    side = seq.side
    names = config.joints[exercise.value]
    if exercise is ExerciseKind.BICEP_CURL and side is Side.BOTH:
        raise FeaturizationError("bicep curl features need a detected side")
    joints = _resolve_joints(names, side) if side is not Side.BOTH else list(names)
    mirror = -1.0 if side is Side.LEFT else 1.0

    neck = seq.track("neck")
    channels = []
    for joint in joints:
        rel = seq.track(joint) - neck
        rel[:, 0] *= mirror
        for axis in (0, 1):
            try:
                channels.append(clean(rel[:, axis], config.window, config.passes))
            except InsufficientDataError:
                raise FeaturizationError(f"joint {joint} (with neck) visible in fewer than 2 frames") from None
    return FeatureSeries(np.stack(channels, axis=1), exercise, seq.source_id)


def _as_matrix(s) -> np.ndarray:
    values = s.values if isinstance(s, FeatureSeries) else np.asarray(s, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return values


def pairwise_distances(q: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix; squared terms are accumulated in dimension order."""
    sq = np.zeros((q.shape[0], c.shape[0]))
    for k in range(q.shape[1]):
        sq += (q[:, k, None] - c[None, :, k]) ** 2
    return np.sqrt(sq)


def dtw_distance(query, candidate) -> float:
    """Unconstrained DTW with the symmetric match/insert/delete step set.

    Returns the accumulated cost G(m, n) with G(i, j) = D(i, j) + min of the
    three predecessors and G(1, 1) = D(1, 1).
    """
    q, c = _as_matrix(query), _as_matrix(candidate)
    if q.shape[0] == 0 or c.shape[0] == 0:
        raise ValueError("DTW needs non-empty series")
    if q.shape[1] != c.shape[1]:
        raise ValueError(f"dimensionality mismatch: {q.shape[1]} vs {c.shape[1]}")
    dist = pairwise_distances(q, c).tolist()
    m, n = len(dist), len(dist[0])
    prev = [math.inf] * n
    for i in range(m):
        row = dist[i]
        cur = [0.0] * n
        for j in range(n):
            if i == 0 and j == 0:
                cur[j] = row[0]
                continue
            best = prev[j]
            if j > 0:
                if cur[j - 1] < best:
                    best = cur[j - 1]
                if prev[j - 1] < best:
                    best = prev[j - 1]
            cur[j] = row[j] + best
        prev = cur
    return prev[n - 1]


@dataclass(frozen=True)
class Example:
    features: FeatureSeries
    label: Verdict
    source_id: str


@dataclass
class LabeledDataset:
    entries: List[Example]

    def __post_init__(self):
        kinds = {e.features.exercise for e in self.entries}
        if len(kinds) > 1:
            raise DatasetError(f"dataset mixes exercises: {sorted(k.value for k in kinds)}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def exercise(self) -> Optional[ExerciseKind]:
        return self.entries[0].features.exercise if self.entries else None

    def labels(self) -> List[Verdict]:
        return [e.label for e in self.entries]


@dataclass(frozen=True)
class Prediction:
    label: Verdict
    distance: float
    source_id: str


def classify(query: FeatureSeries, train: LabeledDataset) -> Prediction:
    """1-nearest-neighbour label by DTW distance.

    Ties prefer the incorrect label, then the smaller source id, so the result
    does not depend on training order.
    """
    if not train.entries:
        raise DatasetError("empty training set")
    if train.exercise is not query.exercise:
        raise DatasetError(f"query is {query.exercise.value} but training set is {train.exercise.value}")
    scored = [(dtw_distance(query, e.features), e.label is not INCORRECT, e.source_id, e) for e in train.entries]
    distance, _, _, best = min(scored, key=lambda t: t[:3])
    return Prediction(best.label, distance, best.source_id)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class SplitMetrics:
    per_class: Dict[Verdict, ClassMetrics]
    average: ClassMetrics
    train_ids: List[str] = field(default_factory=list)
    predictions: List[Tuple[str, Verdict, Verdict, float]] = field(default_factory=list)

    def format_table(self, title: Optional[str] = None) -> str:
        header = f"{'':<12}{'Precision':>10}{'Recall':>10}{'F1 Score':>10}{'Examples':>10}"
        rows = [header]
        if title:
            rows.insert(0, title)
        for name, m in (("Correct", self.per_class[CORRECT]), ("Incorrect", self.per_class[INCORRECT]),
                        ("Avg/Total", self.average)):
            rows.append(f"{name:<12}{m.precision:>10.2f}{m.recall:>10.2f}{m.f1:>10.2f}{m.support:>10d}")
        return "\n".join(rows)

    def to_record(self) -> dict:
        def row(m: ClassMetrics) -> dict:
            return {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
        return {
            "schema_version": 1,
            "kind": "split_metrics",
            "per_class": {label.value: row(m) for label, m in self.per_class.items()},
            "average": row(self.average),
            "train_ids": list(self.train_ids),
            "predictions": [{"source_id": s, "truth": t.value, "predicted": p.value, "distance": d}
                            for s, t, p, d in self.predictions],
        }


def compute_metrics(truth: Sequence[Verdict], predicted: Sequence[Verdict]) -> SplitMetrics:
    """Per-class precision/recall/F1 with a support-weighted average row."""
    if len(truth) != len(predicted):
        raise ValueError("truth and predictions differ in length")
    truth = [Verdict(t) for t in truth]
    predicted = [Verdict(p) for p in predicted]
    per_class = {}
    for label in LABELS:
        tp = sum(t is label and p is label for t, p in zip(truth, predicted))
        fp = sum(t is not label and p is label for t, p in zip(truth, predicted))
        fn = sum(t is label and p is not label for t, p in zip(truth, predicted))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision, recall, f1, tp + fn)
    total = len(truth)
    if total:
        avg = ClassMetrics(*(sum(getattr(m, attr) * m.support for m in per_class.values()) / total
                             for attr in ("precision", "recall", "f1")), total)
    else:
        avg = ClassMetrics(0.0, 0.0, 0.0, 0)
    return SplitMetrics(per_class, avg)


def stratified_split(data: LabeledDataset, seed: int, train_fraction: float) -> Tuple[List[Example], List[Example]]:
    """Seeded per-label shuffle; each label contributes round(n * fraction) training examples."""
    if not 0 < train_fraction < 1:
        raise SplitError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in LABELS:
        group = sorted((e for e in data.entries if e.label is label), key=lambda e: e.source_id)
        order = rng.permutation(len(group))
        n_train = min(len(group), math.floor(len(group) * train_fraction + 0.5))
        if n_train == 0:
            raise SplitError(f"no {label.value} examples in the training portion")
        train.extend(group[i] for i in order[:n_train])
        test.extend(group[i] for i in order[n_train:])
    if not test:
        raise SplitError("test portion is empty")
    return train, test


def evaluate_split(data: LabeledDataset, split_seed: int = 0, train_fraction: float = 0.6) -> SplitMetrics:
    train, test = stratified_split(data, split_seed, train_fraction)
    train_set = LabeledDataset(train)
    preds = [(e, classify(e.features, train_set)) for e in test]
    metrics = compute_metrics([e.label for e, _ in preds], [p.label for _, p in preds])
    metrics.train_ids = [e.source_id for e in train]
    metrics.predictions = [(e.source_id, e.label, p.label, p.distance) for e, p in preds]
    return metrics


def infer_label(name: str) -> Optional[Verdict]:
    """Label from a file-name convention such as ``bicep_good_1`` / ``shrug_bad_3``."""
    tokens = set(Path(name).name.lower().replace("-", "_").replace(".", "_").split("_"))
    good, bad = "good" in tokens or "correct" in tokens, "bad" in tokens or "incorrect" in tokens
    if good == bad:
        return None
    return CORRECT if good else INCORRECT


def parse_label(text: str) -> Verdict:
    text = text.strip().lower()
    if text in ("correct", "good", "1"):
        return CORRECT
    if text in ("incorrect", "bad", "0"):
        return INCORRECT
    raise DatasetError(f"unknown label {text!r}")


@dataclass(frozen=True)
class ManifestRecord:
    path: Path
    label: Verdict
    exercise: ExerciseKind


def read_manifest(path) -> List[ManifestRecord]:
    """One record per line: ``sequence_path, label, exercise`` (commas or whitespace).

    Relative sequence paths resolve against the manifest's folder.
    """
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields_ = [f.strip() for f in line.split(",")] if "," in line else line.split()
        if len(fields_) != 3:
            raise DatasetError(f"{path}:{lineno}: expected 'path, label, exercise'")
        seq_path = Path(fields_[0])
        if not seq_path.is_absolute():
            seq_path = path.parent / seq_path
        try:
            records.append(ManifestRecord(seq_path, parse_label(fields_[1]), ExerciseKind.parse(fields_[2])))
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from None
    return records
