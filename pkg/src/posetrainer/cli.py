"""Command-line front end.

    posetrainer --mode evaluate --exercise bicep_curl --input_folder keypoints/ --output_folder out/
    posetrainer --mode train    --exercise bicep_curl --input_folder sequences/ --output_folder model/
    posetrainer --mode classify --exercise bicep_curl --sequence query.json --output_folder model/
    posetrainer --mode report   --exercise bicep_curl --output_folder model/ --seed 0
    posetrainer --mode ingest   --input_folder keypoints/ --output_folder sequences/

Exit status: 0 correct (or success), 2 incorrect, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from . import classifier, geometry, heuristics, keypoints
from .classifier import FeatureConfig, LabeledDataset
from .heuristics import ThresholdConfig, Verdict
from .keypoints import ExerciseKind

log = logging.getLogger("posetrainer")

EXIT_OK, EXIT_ERROR, EXIT_INCORRECT = 0, 1, 2
MODES = ("evaluate", "classify", "train", "report", "ingest")
INDEX_NAME = "dataset_index.json"
EVALUATION_NAME = "evaluation.json"
METRICS_NAME = "metrics.json"


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    exercise: Optional[ExerciseKind] = None
    video: Optional[Path] = None
    input_folder: Optional[Path] = None
    sequence: Optional[Path] = None
    output_folder: Optional[Path] = None
    config: Optional[Path] = None
    openpose_bin: Optional[str] = None
    seed: int = 0
    train_fraction: float = 0.6
    manifest: Optional[Path] = None
    index: Optional[Path] = None
    pattern: str = "*.json"

    def validate(self) -> None:
        if self.mode in ("evaluate", "classify", "train") and self.exercise is None:
            raise CliError(f"--exercise is required for --mode {self.mode}")
        if self.mode in ("evaluate", "classify", "ingest"):
            given = [p for p in (self.video, self.input_folder, self.sequence) if p is not None]
            if len(given) != 1:
                raise CliError(f"--mode {self.mode} needs exactly one of --video, --input_folder, --sequence")
        if self.mode == "train" and self.input_folder is None and self.manifest is None:
            raise CliError("--mode train needs --input_folder or --manifest")
        if self.mode in ("train", "ingest") and self.output_folder is None:
            raise CliError(f"--mode {self.mode} needs --output_folder")
        if self.mode in ("classify", "report") and self.index is None and self.output_folder is None:
            raise CliError(f"--mode {self.mode} needs --output_folder (or --index) holding {INDEX_NAME}")
        if not 0 < self.train_fraction < 1:
            raise CliError("--train_fraction must lie in (0, 1)")

    @property
    def index_path(self) -> Path:
        return self.index if self.index is not None else self.output_folder / INDEX_NAME

    def thresholds(self) -> ThresholdConfig:
        return ThresholdConfig.from_mapping(self._config_values())

    def features(self) -> FeatureConfig:
        return FeatureConfig.from_mapping(self._config_values())

    def _config_values(self) -> dict:
        if self.config is None:
            return {}
        if not self.config.is_file():
            raise CliError(f"config file not found: {self.config}")
        return heuristics.read_config_file(self.config)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="posetrainer", description="Exercise form evaluation from pose keypoints.")
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--exercise", type=ExerciseKind.parse, help="bicep_curl | front_raise | shoulder_shrug | shoulder_press")
    p.add_argument("--video", type=Path, help="video file; needs a pose estimator executable")
    p.add_argument("--input_folder", type=Path, help="folder of per-frame keypoint files (or of sequences for train)")
    p.add_argument("--sequence", type=Path, help="saved sequence file")
    p.add_argument("--output_folder", type=Path)
    p.add_argument("--config", type=Path, help="key = value threshold/feature config")
    p.add_argument("--openpose_bin", help=f"pose estimator executable (fallback: ${keypoints.OPENPOSE_ENV_VAR})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train_fraction", type=float, default=0.6)
    p.add_argument("--manifest", type=Path, help="lines of 'sequence_path, label, exercise'")
    p.add_argument("--index", type=Path, help=f"dataset index (default: <output_folder>/{INDEX_NAME})")
    p.add_argument("--pattern", default="*.json", help="glob for frame files inside a keypoint folder")
    return p


def _load_input(cfg: RunConfig, out=sys.stdout) -> keypoints.PoseSequence:
    if cfg.video is not None:
        print("processing video file...", file=out)
        return keypoints.run_estimator(cfg.video, cfg.openpose_bin)
    if cfg.input_folder is not None:
        return keypoints.load_directory(cfg.input_folder, cfg.pattern)
    return keypoints.load_any(cfg.sequence)


def _normalized(seq: keypoints.PoseSequence, exercise: ExerciseKind) -> geometry.NormalizedSequence:
    return geometry.normalize_sequence(seq, exercise)


def write_series_csv(path: Path, raw, smoothed) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "raw", "smoothed"])
        for i, (r, s) in enumerate(zip(raw, smoothed)):
            writer.writerow([i, "" if not math.isfinite(r) else f"{r:.6f}", f"{s:.6f}"])


def write_evaluation(ev: heuristics.Evaluation, folder: Path) -> Path:
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / EVALUATION_NAME
    path.write_text(json.dumps(ev.to_record(), indent=2) + "\n")
    for name, values in ev.series_dump.items():
        if name.endswith("_raw"):
            continue
        write_series_csv(folder / f"series_{name}.csv", ev.series_dump.get(f"{name}_raw", values), values)
    return path


def cmd_evaluate(cfg: RunConfig, out=sys.stdout) -> int:
    seq = _load_input(cfg, out)
    ev = heuristics.evaluate(_normalized(seq, cfg.exercise), cfg.exercise, cfg.thresholds())
    for line in ev.transcript_lines():
        print(line, file=out)
    if cfg.output_folder is not None:
        write_evaluation(ev, cfg.output_folder)
    return EXIT_OK if ev.verdict is Verdict.CORRECT else EXIT_INCORRECT


def cmd_ingest(cfg: RunConfig, out=sys.stdout) -> int:
    seq = _load_input(cfg, out)
    cfg.output_folder.mkdir(parents=True, exist_ok=True)
    path = keypoints.save_sequence(seq, cfg.output_folder / f"{seq.source_id or 'sequence'}.json")
    print(f"wrote {len(seq)} frames to {path}", file=out)
    return EXIT_OK


def _discover(folder: Path) -> List[Path]:
    """Sequence candidates in a folder: saved sequence files and keypoint sub-folders, by name."""
    if not folder.is_dir():
        raise CliError(f"input folder not found: {folder}")
    found = []
    for child in sorted(folder.iterdir(), key=lambda p: p.name):
        if child.is_dir() and any(child.glob("*.json")):
            found.append(child)
        elif child.suffix == ".json" and keypoints.is_saved_sequence(child):
            found.append(child)
    return found


def _featurize_path(path: Path, exercise: ExerciseKind, features: FeatureConfig, pattern: str = "*.json"):
    seq = keypoints.load_any(path, pattern)
    return classifier.featurize(_normalized(seq, exercise), exercise, features)


def cmd_train(cfg: RunConfig, out=sys.stdout) -> int:
    features = cfg.features()
    labeled = {}
    if cfg.input_folder is not None:
        for path in _discover(cfg.input_folder):
            label = classifier.infer_label(path.stem if path.is_file() else path.name)
            if label is None:
                log.warning("skipping %s: no good/bad in its name and not in a manifest", path)
                continue
            labeled[path.resolve()] = label
    if cfg.manifest is not None:
        for rec in classifier.read_manifest(cfg.manifest):
            if rec.exercise is not cfg.exercise:
                continue
            labeled[rec.path.resolve()] = rec.label
    if not labeled:
        raise CliError("no labeled sequences found")

    entries = []
    for path, label in sorted(labeled.items(), key=lambda kv: str(kv[0])):
        fs = _featurize_path(path, cfg.exercise, features, cfg.pattern)
        entries.append({"path": str(path), "label": label.value, "source_id": fs.source_id or path.stem})
    counts = {v.value: sum(e["label"] == v.value for e in entries) for v in Verdict}
    if min(counts.values()) == 0:
        log.warning("dataset has only one label; classification will be degenerate")

    index = {
        "schema_version": 1,
        "kind": "dataset_index",
        "exercise": cfg.exercise.value,
        "feature_config_hash": features.digest(),
        "feature_config": features.to_dict(),
        "entries": entries,
    }
    cfg.output_folder.mkdir(parents=True, exist_ok=True)
    path = cfg.output_folder / INDEX_NAME
    path.write_text(json.dumps(index, indent=2) + "\n")
    print(f"indexed {len(entries)} sequences ({counts['correct']} correct, {counts['incorrect']} incorrect) "
          f"in {path}", file=out)
    return EXIT_OK


def load_index(cfg: RunConfig) -> dict:
    path = cfg.index_path
    if not path.is_file():
        raise CliError(f"dataset index not found: {path} (run --mode train first)")
    index = json.loads(path.read_text())
    if index.get("kind") != "dataset_index" or index.get("schema_version") != 1:
        raise CliError(f"{path} is not a version-1 dataset index")
    exercise = ExerciseKind(index["exercise"])
    if cfg.exercise is not None and cfg.exercise is not exercise:
        raise CliError(f"index is for {exercise.value}, not {cfg.exercise.value}")
    if index["feature_config_hash"] != cfg.features().digest():
        raise CliError("dataset index is stale: feature configuration changed since training; re-run --mode train")
    return index


def load_dataset(index: dict, features: FeatureConfig, pattern: str = "*.json") -> LabeledDataset:
    exercise = ExerciseKind(index["exercise"])
    entries = []
    for e in index["entries"]:
        fs = _featurize_path(Path(e["path"]), exercise, features, pattern)
        fs = classifier.FeatureSeries(fs.values, exercise, e["source_id"])
        entries.append(classifier.Example(fs, Verdict(e["label"]), e["source_id"]))
    return LabeledDataset(entries)


def cmd_classify(cfg: RunConfig, out=sys.stdout) -> int:
    index = load_index(cfg)
    features = cfg.features()
    train = load_dataset(index, features, cfg.pattern)
    seq = _load_input(cfg, out)
    query = classifier.featurize(_normalized(seq, cfg.exercise), cfg.exercise, features)
    pred = classifier.classify(query, train)
    print(f"Predicted label: {pred.label.value}", file=out)
    print(f"Nearest neighbor: {pred.source_id}", file=out)
    print(f"DTW distance: {pred.distance!r}", file=out)
    return EXIT_OK if pred.label is Verdict.CORRECT else EXIT_INCORRECT


def cmd_report(cfg: RunConfig, out=sys.stdout) -> int:
    index = load_index(cfg)
    data = load_dataset(index, cfg.features(), cfg.pattern)
    metrics = classifier.evaluate_split(data, cfg.seed, cfg.train_fraction)
    title = index["exercise"].replace("_", " ").title()
    print(metrics.format_table(title), file=out)
    record = metrics.to_record()
    record.update(exercise=index["exercise"], seed=cfg.seed, train_fraction=cfg.train_fraction)
    folder = cfg.output_folder or cfg.index_path.parent
    (folder / METRICS_NAME).write_text(json.dumps(record, indent=2) + "\n")
    return EXIT_OK


COMMANDS = {
    "evaluate": cmd_evaluate,
    "classify": cmd_classify,
    "train": cmd_train,
    "report": cmd_report,
    "ingest": cmd_ingest,
}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    cfg = RunConfig(**vars(args))
    try:
        cfg.validate()
        return COMMANDS[cfg.mode](cfg, out)
    except (CliError, ValueError, OSError, keypoints.EstimatorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
