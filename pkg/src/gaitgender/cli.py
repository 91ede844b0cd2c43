"""Command-line interface.

Every machine-facing output is a JSON line. Failures print one JSON line
``{"error": <type>, "message": <text>}`` on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .attachment import remove_attachment
from .dataset import export, frame_files, ingest, load_frame, save_frame
from .errors import GaitError
from .evaluation import crossvalidate_many, evaluate_model, format_table
from .features import compute_agi, extract_lower
from .modelfile import MODEL_ENV, default_model_path, load_model, load_params, save_model
from .pipeline import PipelineParams, StreamState, step_stream, train_pipeline
from .silhouette import bounding_box, normalize
from .synth import generate_synthetic_walker, synthetic_sequences
from .viewpoint import estimate_viewpoint, template_distances

BUDGET_MS = 48.0
STAGES = ("normalize", "agi_update", "view_estimate", "removal", "predict")
EXIT_ERROR = 2


def emit(obj, stream=None):
    print(json.dumps(obj, sort_keys=True), file=stream or sys.stdout, flush=True)


def _params(args) -> PipelineParams:
    p = load_params(args.config) if getattr(args, "config", None) else PipelineParams()
    if getattr(args, "seed", None) is not None:
        p = PipelineParams.from_dict({**p.to_dict(), "seed": args.seed})
    return p


def _dataset(args, conditions):
    if args.data:
        return ingest(args.data, args.manifest)
    return synthetic_sequences(args.synthetic, conditions=tuple(conditions), frames=args.frames,
                               noise=args.noise, seed=args.data_seed)


def _model_path(args):
    return Path(args.model) if args.model else default_model_path()


def _frames(paths):
    """Frames from image files and/or directories (directory contents in frame order)."""
    out = []
    for p in map(Path, paths):
        out.extend(frame_files(p) if p.is_dir() else [p])
    return out


def cmd_train(args):
    params = _params(args)
    t = time.perf_counter()
    model = train_pipeline(_dataset(args, ("normal",)), params)
    path = save_model(model, args.out or default_model_path())
    emit({"model": str(path), "views": list(model.params.views), "fingerprint": model.fingerprint,
          "seconds": round(time.perf_counter() - t, 3)})
    return 0


def cmd_classify(args):
    model = load_model(_model_path(args))
    state = StreamState()
    for path in _frames(args.frames):
        frame = load_frame(path)
        t = time.perf_counter()
        state, dec = step_stream(state, frame if bounding_box(frame) else None, model,
                                 removal=not args.no_removal)
        latency = (time.perf_counter() - t) * 1000.0
        if dec is not None:
            emit({**dec.to_json(), "path": str(path), "latency_ms": latency})
    return 0


def cmd_estimate_view(args):
    model = load_model(_model_path(args))
    frames = [load_frame(p) for p in _frames(args.frames)]
    norm = [normalize(f, None, model.params.height, model.params.width) for f in frames if f.any()]
    low = extract_lower(compute_agi(norm))
    dist = template_distances(low, model.vp)
    emit({"view": int(estimate_viewpoint(low, model.vp)), "frames": len(norm),
          "distances": {str(v): float(d) for v, d in zip(model.vp.views, dist)}})
    return 0


def cmd_remove_attachment(args):
    model = load_model(_model_path(args))
    frame = load_frame(args.image)
    if args.raw:
        frame = normalize(frame, None, model.params.height, model.params.width)
    out, report = remove_attachment(frame, args.view, model.ds)
    save_frame(out, args.out)
    doc = {"input": str(args.image), "output": str(args.out), "view": args.view, **report.to_json()}
    if args.report:
        Path(args.report).write_text(json.dumps(doc, sort_keys=True) + "\n")
    emit(doc if not args.report else {k: doc[k] for k in ("output", "removed_pixel_count", "violating_runs")})
    return 0


def _folds(spec):
    if spec is None:
        return None
    if "," in spec or "-" in spec:
        ids = []
        for part in spec.split(","):
            lo, _, hi = part.partition("-")
            ids.extend(range(int(lo), int(hi or lo) + 1))
        return ids
    return list(range(int(spec)))


def cmd_evaluate(args):
    removal = not args.no_removal
    if args.model:
        model = load_model(args.model)
        report = evaluate_model(model, _dataset(args, (args.condition,)), args.condition, removal)
        reports = [report]
    else:
        params = _params(args)
        seqs = _dataset(args, ("normal", args.condition))
        settings = [(args.condition, removal)]
        if args.compare and args.condition != "normal":
            settings.append((args.condition, not removal))
        result = crossvalidate_many(seqs, params, tuple(settings), seed=params.seed, folds=_folds(args.folds))
        reports = list(result.values())
    if not args.quiet:
        print(format_table(reports), file=sys.stderr if args.json_only else sys.stdout)
    for r in reports:
        emit(r.to_json())
    return 0


def cmd_synth(args):
    conds = tuple(args.conditions.split(","))
    seqs = synthetic_sequences(args.subjects, conditions=conds, frames=args.frames, noise=args.noise,
                               seed=args.data_seed, sequences_per_condition=args.sequences)
    root = export(seqs, args.out)
    emit({"root": str(root), "sequences": len(seqs), "subjects": 2 * args.subjects})
    return 0


def bench(model, frames=60, view=90, attachment="bag", removal=True, seed=0):
    """Per-stage latency of the streaming path; returns a JSON-ready dict.

    ``steady`` covers frames after the first decision, where only the newest
    frame needs correction; ``first_decision`` is the frame that fills the
    window and corrects all of it.
    """
    raw = [generate_synthetic_walker(1, view, t, subject=1, attachment=attachment, seed=seed)
           for t in range(frames)]
    T = model.params.window
    state = StreamState()
    per_frame = []
    for f in raw:
        timings = {}
        t = time.perf_counter()
        state, _ = step_stream(state, f, model, removal=removal, timings=timings)
        timings["total"] = time.perf_counter() - t
        per_frame.append(timings)
    steady = per_frame[T:]
    if not steady:
        raise GaitError(f"bench needs more than {T} frames")
    ms = {s: 1000.0 * float(np.mean([p.get(s, 0.0) for p in steady])) for s in (*STAGES, "total")}
    return {
        "frames": frames,
        "view": view,
        "window": T,
        "steady_ms": ms,
        "steady_max_ms": 1000.0 * max(p["total"] for p in steady),
        "first_decision_ms": 1000.0 * per_frame[T - 1]["total"],
        "budget_ms": BUDGET_MS,
        "within_budget": ms["total"] <= BUDGET_MS,
    }


def cmd_bench(args):
    if args.model:
        model = load_model(args.model)
    else:
        seqs = synthetic_sequences(2, frames=args.window_frames, seed=args.data_seed)
        model = train_pipeline(seqs, _params(args))
    doc = bench(model, args.frames, args.view, None if args.no_attachment else "bag", not args.no_removal)
    if not args.quiet:
        print("stage          ms/frame", file=sys.stderr)
        for s in (*STAGES, "total"):
            print(f"{s:<14}{doc['steady_ms'][s]:9.2f}", file=sys.stderr)
        print(f"budget        {BUDGET_MS:9.2f}", file=sys.stderr)
    emit(doc)
    return 0 if doc["within_budget"] or not args.strict else 1


def _add_data(p, synthetic_default=None):
    g = p.add_argument_group("data")
    g.add_argument("--data", help="dataset root (subject/cond-NN/VVV/frame.png + manifest)")
    g.add_argument("--manifest", help="manifest path (default: manifest.txt under --data)")
    g.add_argument("--synthetic", type=int, default=synthetic_default,
                   help="use N synthetic subjects per gender instead of --data")
    g.add_argument("--frames", type=int, default=20, help="frames per synthetic sequence")
    g.add_argument("--noise", type=float, default=0.0, help="synthetic pixel flip fraction")
    g.add_argument("--data-seed", type=int, default=0, help="synthetic generator seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitgender", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    model_help = f"model file (default: ${MODEL_ENV} or ./gaitgender.model)"

    p = sub.add_parser("train", help="train a model and write the model file")
    _add_data(p, synthetic_default=8)
    p.add_argument("--config", help="params JSON (bare params or a model header)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=model_help)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="stream frames through a model; one JSON line per decision")
    p.add_argument("frames", nargs="+", help="frame images or directories, in stream order")
    p.add_argument("--model", help=model_help)
    p.add_argument("--no-removal", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("estimate-view", help="nearest view template for a set of frames")
    p.add_argument("frames", nargs="+")
    p.add_argument("--model", help=model_help)
    p.set_defaults(func=cmd_estimate_view)

    p = sub.add_parser("remove-attachment", help="correct one silhouette image")
    p.add_argument("image")
    p.add_argument("--view", type=int, required=True)
    p.add_argument("--out", required=True, help="corrected image path")
    p.add_argument("--report", help="write the correction report JSON here")
    p.add_argument("--raw", action="store_true", help="normalize the input first")
    p.add_argument("--model", help=model_help)
    p.set_defaults(func=cmd_remove_attachment)

    p = sub.add_parser("evaluate", help="score a model, or run paired cross-validation")
    _add_data(p, synthetic_default=None)
    p.add_argument("--model", help="score this model instead of cross-validating")
    p.add_argument("--condition", choices=("normal", "bag", "coat"), default="normal")
    p.add_argument("--no-removal", action="store_true")
    p.add_argument("--compare", action="store_true", help="also score the opposite removal setting")
    p.add_argument("--seed", type=int, help="pairing and training seed")
    p.add_argument("--folds", help="fold count N, or indices like 0,2,4-6")
    p.add_argument("--config")
    p.add_argument("--json-only", action="store_true", help="send the table to stderr")
    p.add_argument("--quiet", action="store_true", help="no table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="write a synthetic dataset to disk")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=2, help="subjects per gender")
    p.add_argument("--conditions", default="normal")
    p.add_argument("--sequences", type=int, default=1, help="sequences per condition")
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--data-seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help=f"per-stage latency against the {BUDGET_MS:g} ms budget")
    p.add_argument("--model", help="model file (default: train a small synthetic one)")
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--view", type=int, default=90)
    p.add_argument("--no-attachment", action="store_true")
    p.add_argument("--no-removal", action="store_true")
    p.add_argument("--strict", action="store_true", help="exit 1 when over budget")
    p.add_argument("--window-frames", type=int, default=15, help=argparse.SUPPRESS)
    p.add_argument("--data-seed", type=int, default=0, help=argparse.SUPPRESS)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "synthetic") and args.data is None and args.synthetic is None:
        parser.error("give --data or --synthetic N")
    try:
        return args.func(args)
    except (GaitError, OSError, ValueError, KeyError) as exc:
        # a bare KeyError quotes its message
        msg = str(exc.args[0]) if type(exc) is KeyError and exc.args else str(exc)
        emit({"error": type(exc).__name__, "message": msg}, sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
