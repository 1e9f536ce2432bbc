"""DTW 1-NN on the synthetic bicep-curl dataset, over several dataset and split seeds.

    python scripts/synthetic_experiment.py --datasets 5 --splits 3
"""

import argparse
import time

import numpy as np

from posetrainer import classifier as clf, geometry as geo, synthetic
from posetrainer.keypoints import ExerciseKind


def build(seed, args):
    samples = synthetic.bicep_dataset(args.n_per_class, args.n_per_class, seed=seed, sigma=args.sigma,
                                      spike_rate=args.spike_rate, reps=args.reps)
    entries = []
    for s in samples:
        norm = geo.normalize_sequence(s.sequence, ExerciseKind.BICEP_CURL)
        entries.append(clf.Example(clf.featurize(norm, ExerciseKind.BICEP_CURL), s.label, s.sequence.source_id))
    return clf.LabeledDataset(entries)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--datasets", type=int, default=3)
    p.add_argument("--splits", type=int, default=3)
    p.add_argument("--n_per_class", type=int, default=20)
    p.add_argument("--train_fraction", type=float, default=0.6)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--spike_rate", type=float, default=0.01)
    p.add_argument("--reps", type=int, default=2)
    args = p.parse_args()

    scores = []
    for d in range(args.datasets):
        start = time.perf_counter()
        data = build(d, args)
        for k in range(args.splits):
            m = clf.evaluate_split(data, k, args.train_fraction)
            scores.append(m.average.f1)
            print(m.format_table(f"dataset seed {d}, split seed {k}"))
            print()
        print(f"dataset {d}: {time.perf_counter() - start:.1f}s\n")
    scores = np.array(scores)
    print(f"weighted F1 over {scores.size} runs: mean {scores.mean():.3f}, min {scores.min():.3f}, "
          f"runs >= 0.90: {(scores >= 0.9).mean():.0%}")


if __name__ == "__main__":
    main()
