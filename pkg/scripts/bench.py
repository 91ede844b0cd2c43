"""Per-stage latency of the streaming classify path against the 48 ms budget.

Trains a model on generated data (or loads one) and streams a bag-carrying
walker through it.

    python3 scripts/bench.py --subjects 4 --frames 90
"""

import argparse
import json
import sys

from gaitgender.cli import STAGES, bench
from gaitgender.modelfile import load_model
from gaitgender.pipeline import train_pipeline
from gaitgender.synth import synthetic_sequences


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", help="model file; default trains one on synthetic data")
    ap.add_argument("--subjects", type=int, default=4, help="training subjects per gender")
    ap.add_argument("--frames", type=int, default=90, help="frames to stream")
    ap.add_argument("--views", default="0,90,180", help="comma-separated views to bench")
    ap.add_argument("--no-removal", action="store_true")
    args = ap.parse_args(argv)

    model = load_model(args.model) if args.model else train_pipeline(synthetic_sequences(args.subjects, frames=15))
    rows = []
    for v in map(int, args.views.split(",")):
        doc = bench(model, args.frames, v, "bag", not args.no_removal)
        rows.append(doc)
        stages = "  ".join(f"{s} {doc['steady_ms'][s]:6.2f}" for s in STAGES)
        print(f"view {v:3d}  {stages}  total {doc['steady_ms']['total']:6.2f} ms"
              f"  (max {doc['steady_max_ms']:.1f}, first decision {doc['first_decision_ms']:.1f})")
    print(json.dumps(rows, sort_keys=True), file=sys.stderr)
    return 0 if all(r["within_budget"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
