"""Paired cross-validation on a generated dataset: normal, bag with and without removal.

    python3 scripts/synthetic_cv.py --subjects 8 --frames 20 --out cv.json
"""

import argparse
import json
import sys
import time

from gaitgender.evaluation import crossvalidate_many, format_table
from gaitgender.pipeline import PipelineParams
from gaitgender.synth import synthetic_sequences

SETTINGS = (("normal", True), ("bag", True), ("bag", False))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subjects", type=int, default=8, help="subjects per gender")
    ap.add_argument("--frames", type=int, default=20, help="frames per sequence")
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--out", help="write the reports as JSON here")
    args = ap.parse_args(argv)

    seqs = synthetic_sequences(args.subjects, conditions=("normal", "bag"), frames=args.frames,
                               noise=args.noise, seed=args.data_seed)
    t = time.perf_counter()
    reports = crossvalidate_many(seqs, PipelineParams(seed=args.seed), SETTINGS, seed=args.seed)
    print(format_table(reports.values()))
    print(f"{time.perf_counter() - t:.1f} s", file=sys.stderr)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump([r.to_json() for r in reports.values()], fh, indent=1, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
