"""Exercise form evaluation from 2-D pose keypoint sequences."""

from .keypoints import ExerciseKind, Part, Pose, PoseSequence, load_any, load_saved, save_sequence
from .geometry import NormalizedSequence, Side, normalize_sequence
from .heuristics import Evaluation, ThresholdConfig, Verdict, evaluate
from .classifier import FeatureSeries, LabeledDataset, classify, dtw_distance, evaluate_split, featurize

__version__ = "0.1.0"

__all__ = [
    "ExerciseKind", "Part", "Pose", "PoseSequence", "load_any", "load_saved", "save_sequence",
    "NormalizedSequence", "Side", "normalize_sequence",
    "Evaluation", "ThresholdConfig", "Verdict", "evaluate",
    "FeatureSeries", "LabeledDataset", "classify", "dtw_distance", "evaluate_split", "featurize",
]
