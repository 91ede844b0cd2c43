"""Training (per-view templates, envelopes, classifiers) and streaming classification."""

from __future__ import annotations

import hashlib
import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .attachment import remove_attachment
from .dataset import GaitSequence
from .distance_signal import DSModel, build_ds, build_ds_model, smooth
from .errors import GaitError, MissingView
from .features import GaitWindowParams, SlidingAGI, extract_lower
from .silhouette import Box, bounding_box, largest_component, normalize, recenter
from .svm import ClassifierBank, train_bank
from .viewpoint import DEFAULT_VIEWS, VPModel, estimate_viewpoint


@dataclass(frozen=True)
class PipelineParams:
    height: int = 144
    width: int = 144
    bins: int = 360
    n_avg: int = 3
    frame_rate: float = 25.0
    cycle_time: float = 0.6
    views: tuple = DEFAULT_VIEWS
    C: float = 1.0
    max_iter: int = 100
    tol: float = 1e-3
    seed: int = 0
    agi_stride: int = 1

    @property
    def window(self) -> int:
        return GaitWindowParams(self.frame_rate, self.cycle_time).window

    @property
    def shape(self) -> tuple:
        return (self.height, self.width)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["views"] = list(self.views)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameters: {sorted(unknown)}")
        d = dict(d)
        if "views" in d:
            d["views"] = tuple(int(v) for v in d["views"])
        return cls(**d)


def pass_through_detector(frame) -> Box | None:
    """Stand-in person detector: the bounding box of the foreground, or None."""
    return bounding_box(frame)


@dataclass
class SequenceFeatures:
    """Everything the trainer and the evaluator need from one sequence."""

    subject: str
    gender: int
    condition: str
    view: int
    index: int
    frames: list  # normalized masks; undetected frames are None
    signals: list = field(default_factory=list)  # smoothed distance signals
    lower_sum: np.ndarray | None = None
    lower_count: int = 0
    agi_sums: list = field(default_factory=list)  # (pixel counts, window length)

    def agis(self):
        for counts, n in self.agi_sums:
            yield counts / n


def _windows(frames, T, stride):
    # runs of consecutive detections, AGI windows within each run
    runs, cur = [], []
    for f in frames:
        if f is None:
            if cur:
                runs.append(cur)
            cur = []
        else:
            cur.append(f)
    if cur:
        runs.append(cur)
    for run in runs:
        if len(run) < T:
            yield run
            continue
        for start in range(0, len(run) - T + 1, stride):
            yield run[start : start + T]


def extract_features(seq: GaitSequence, params: PipelineParams, detector=pass_through_detector,
                     hasher=None, with_training=True) -> SequenceFeatures:
    raw = seq.frames()
    frames = []
    for f in raw:
        if hasher is not None:
            hasher.update(b"\x00" if f is None else np.packbits(np.asarray(f, bool)).tobytes())
        box = None if f is None else detector(f)
        if box is None:
            frames.append(None)
            continue
        try:
            frames.append(normalize(f, box, params.height, params.width))
        except GaitError:
            frames.append(None)
    feat = SequenceFeatures(seq.subject, seq.gender, seq.condition, seq.view, seq.index, frames)
    if not with_training:
        return feat
    present = [f for f in frames if f is not None]
    for f in present:
        low = extract_lower(f)
        feat.lower_sum = low.astype(np.int64) if feat.lower_sum is None else feat.lower_sum + low
        feat.lower_count += 1
        feat.signals.append(smooth(build_ds(f, params.bins).values, params.n_avg))
    for win in _windows(frames, params.window, params.agi_stride):
        feat.agi_sums.append((np.sum(win, axis=0, dtype=np.uint16), len(win)))
    return feat


def extract_all(sequences, params: PipelineParams, detector=pass_through_detector, conditions=None):
    """Features for every sequence plus a content hash of the raw data."""
    hasher = hashlib.sha256()
    out = []
    for seq in sorted(sequences, key=lambda s: s.key):
        if conditions is not None and seq.condition not in conditions:
            continue
        hasher.update(repr((seq.key, seq.gender)).encode())
        out.append(extract_features(seq, params, detector, hasher,
                                    with_training=seq.condition == "normal"))
    return out, hasher.hexdigest()


@dataclass(frozen=True)
class TrainedModel:
    params: PipelineParams
    vp: VPModel
    ds: DSModel
    bank: ClassifierBank
    fingerprint: str = ""

    @property
    def views(self):
        return self.params.views

    def classify(self, frames, removal=True, detector=pass_through_detector):
        """Decisions for a stream of raw frames (``None`` = no detection)."""
        state = StreamState()
        out = []
        for f in frames:
            state, dec = step_stream(state, f, self, removal=removal, detector=detector)
            if dec is not None:
                out.append(dec)
        return out

    def predict_sequence(self, feat: SequenceFeatures, removal=True):
        state = StreamState()
        out = []
        for f in feat.frames:
            if f is None:
                state.frame_index += 1
                state.reset()
                continue
            dec = push_normalized(state, f, self, removal)
            if dec is not None:
                out.append(dec)
        return out


def fit_from_features(features, params: PipelineParams, fingerprint: str = "") -> TrainedModel:
    """Build the VP model, DS model and classifier bank from normal-walking features."""
    normal = [f for f in features if f.condition == "normal"]
    lower, signals, data = {}, {}, {}
    for v in params.views:
        sel = [f for f in normal if f.view == v]
        if not sel or not any(f.lower_count for f in sel):
            raise MissingView(v, "no normal-walking frames")
        total = sum(f.lower_sum for f in sel if f.lower_count)
        count = sum(f.lower_count for f in sel)
        lower[v] = total / count
        signals[v] = [s for f in sel for s in f.signals]
        X = [a.ravel() for f in sel for a in f.agis()]
        y = [f.gender for f in sel for _ in f.agi_sums]
        data[v] = (np.array(X, dtype=np.float64), np.array(y, dtype=np.float64))

    views = tuple(sorted(params.views))
    vp = VPModel(views, np.stack([lower[v] for v in views]), params.shape)
    ds = build_ds_model(signals, views, params.n_avg)
    bank = train_bank(data, views, C=params.C, max_iter=params.max_iter, tol=params.tol, seed=params.seed)
    return TrainedModel(params, vp, ds, bank, fingerprint)


def train_pipeline(sequences, params: PipelineParams | None = None,
                   detector=pass_through_detector) -> TrainedModel:
    params = params or PipelineParams()
    feats, fp = extract_all(sequences, params, detector, conditions=("normal",))
    return fit_from_features(feats, params, fp)


@dataclass(frozen=True)
class Decision:
    frame: int
    view: int
    label: int
    value: float

    def to_json(self) -> dict:
        return {"frame": self.frame, "view": self.view, "label": self.label, "decision_value": self.value}


@dataclass
class StreamState:
    """Per-person streaming state; single owner, never shared between streams."""

    window: SlidingAGI | None = None
    ids: deque = field(default_factory=deque)
    counter: int = 0
    frame_index: int = -1
    last_decision: Decision | None = None
    _corrected: dict = field(default_factory=dict, repr=False)  # frame id -> (view, mask)

    @property
    def buffer(self):
        return self.window.frames if self.window is not None else []

    def reset(self):
        self.counter = 0
        self.ids.clear()
        self._corrected.clear()
        if self.window is not None:
            self.window.clear()
        return None


def _corrected_frame(state, fid, frame, view, model):
    hit = state._corrected.get(fid)
    if hit is not None and hit[0] == view:
        return hit[1]
    out, report = remove_attachment(frame, view, model.ds)
    if report.violating_runs and out.any():
        out = recenter(largest_component(out))
    state._corrected[fid] = (view, out)
    return out


class _Stages:
    """Accumulates wall time per stage into a dict; a no-op when given None."""

    def __init__(self, sink):
        self.sink = sink
        self.t = time.perf_counter() if sink is not None else 0.0

    def mark(self, stage):
        if self.sink is None:
            return
        now = time.perf_counter()
        self.sink[stage] = self.sink.get(stage, 0.0) + (now - self.t)
        self.t = now


def push_normalized(state: StreamState, frame, model: TrainedModel, removal=True, timings=None):
    """Append a normalized silhouette and classify once the window is full.

    ``timings``, if a dict, accumulates seconds spent per stage.
    """
    p = model.params
    clock = _Stages(timings)
    if state.window is None:
        state.window = SlidingAGI(p.shape)
    state.frame_index += 1
    state.counter += 1
    state.window.append(frame)
    state.ids.append(state.frame_index)
    if state.counter < p.window:
        clock.mark("agi_update")
        return None

    agi = state.window.mean()
    clock.mark("agi_update")
    view = estimate_viewpoint(extract_lower(agi), model.vp)
    clock.mark("view_estimate")
    if removal:
        acc = np.zeros(p.shape, dtype=np.int32)
        for fid, f in zip(state.ids, state.window.frames):
            acc += _corrected_frame(state, fid, f, view, model)
        agi = acc / len(state.ids)
        clock.mark("removal")
    label, value = model.bank[view].predict(agi.ravel())
    dec = Decision(state.frame_index, view, label, value)
    state.last_decision = dec

    state.window.popleft()
    state._corrected.pop(state.ids.popleft(), None)
    clock.mark("predict")
    return dec


def step_stream(state: StreamState, frame, model: TrainedModel, box: Box | None = None,
                removal: bool = True, detector=pass_through_detector, timings=None):
    """Advance one frame. Returns ``(state, decision or None)``.

    A missing detection or a frame that cannot be normalized resets the
    consecutive-detection counter and empties the window.
    """
    clock = _Stages(timings)
    if frame is not None and box is None:
        box = detector(frame)
    if frame is None or box is None:
        state.frame_index += 1
        return state, state.reset()
    try:
        norm = normalize(frame, box, model.params.height, model.params.width)
    except GaitError:
        state.frame_index += 1
        return state, state.reset()
    clock.mark("normalize")
    return state, push_normalized(state, norm, model, removal, timings)
