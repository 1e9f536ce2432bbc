"""Write synthetic estimator-style keypoint folders for trying the CLI.

    python scripts/make_demo_data.py demo/
    posetrainer --mode evaluate --exercise bicep_curl --input_folder demo/keypoints/bicep_good_00 --output_folder demo/out
    posetrainer --mode train --exercise bicep_curl --input_folder demo/keypoints --output_folder demo/model
    posetrainer --mode report --output_folder demo/model --seed 0
"""

import argparse
from pathlib import Path

from posetrainer import synthetic


def main():
    p = argparse.ArgumentParser(description="Write synthetic keypoint folders.")
    p.add_argument("folder", type=Path)
    p.add_argument("--n_per_class", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    root = args.folder / "keypoints"
    for s in synthetic.bicep_dataset(args.n_per_class, args.n_per_class, seed=args.seed):
        synthetic.write_frame_files(s.sequence, root / s.sequence.source_id)
    print(f"wrote {2 * args.n_per_class} clips under {root}")


if __name__ == "__main__":
    main()
