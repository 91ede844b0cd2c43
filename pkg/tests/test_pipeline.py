import numpy as np
import pytest

from gaitgender.features import extract_lower
from gaitgender.modelfile import to_bytes
from gaitgender.pipeline import (
    PipelineParams,
    StreamState,
    push_normalized,
    step_stream,
    train_pipeline,
)
from gaitgender.silhouette import normalize
from gaitgender.synth import generate_synthetic_walker, synthetic_sequences

VIEWS = tuple(range(0, 181, 18))


def walk(gender, view, n, subject=0, start=0, **kw):
    return [generate_synthetic_walker(gender, view, t, subject=subject, **kw) for t in range(start, start + n)]


def test_params_defaults_and_round_trip():
    p = PipelineParams()
    assert p.window == 15 and p.shape == (144, 144) and p.views == VIEWS
    assert PipelineParams.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError, match="bogus"):
        PipelineParams.from_dict({"bogus": 1})


def test_model_structure(small_model):
    m = small_model
    assert m.vp.views == VIEWS and m.vp.templates.shape == (11, 42, 144)
    assert m.ds.views == VIEWS and m.ds.maxds.shape == (11, 360) and np.all(m.ds.minds <= m.ds.maxds)
    assert m.bank.views == VIEWS and all(m.bank[v].dim == 144 * 144 for v in VIEWS)
    assert len(m.fingerprint) == 64


def test_vp_templates_are_mean_training_lower_bands(small_model):
    for view in (0, 90, 162):
        lows = [extract_lower(normalize(f)).astype(float)
                for g in (-1, 1) for s in range(2) for f in walk(g, view, 16, subject=s)]
        assert np.max(np.abs(small_model.vp.template(view) - np.mean(lows, axis=0))) <= 1e-12


def test_first_decision_at_window_length(small_model):
    frames = walk(1, 90, 20)
    state = StreamState()
    got = []
    for f in frames:
        state, dec = step_stream(state, f, small_model)
        got.append(dec)
    assert all(d is None for d in got[:14])
    assert all(d is not None for d in got[14:])
    assert got[14].frame == 14
    assert small_model.classify(frames[:14]) == []


def test_detection_gap_resets_counter(small_model):
    frames = walk(-1, 54, 40)
    frames[20] = None
    decs = small_model.classify(frames)
    idx = [d.frame for d in decs]
    # frames 14..19 decide, frame 20 is missing, the counter refills over frames 21..35
    assert idx == list(range(14, 20)) + list(range(35, 40))


def test_undetectable_frame_also_resets(small_model):
    frames = walk(-1, 54, 32)
    frames[5] = np.zeros_like(frames[5])
    assert [d.frame for d in small_model.classify(frames)] == list(range(20, 32))


def test_decisions_are_deterministic(small_model, small_params):
    frames = walk(1, 126, 25, subject=7, attachment="bag")
    assert small_model.classify(frames) == small_model.classify(frames)
    again = train_pipeline(synthetic_sequences(2, frames=16, seed=0), small_params)
    assert again.classify(frames) == small_model.classify(frames)


def test_removal_is_transparent_on_clean_training_frames(small_model):
    frames = walk(-1, 90, 16)
    on = small_model.classify(frames, removal=True)
    off = small_model.classify(frames, removal=False)
    assert on and on == off


@pytest.mark.parametrize("gender", [-1, 1])
def test_training_walker_classified_correctly(small_model, gender):
    decs = small_model.classify(walk(gender, 90, 16, subject=1))
    assert decs and all(d.view == 90 and d.label == gender for d in decs)


def test_timings_collect_every_stage(small_model):
    state, timings = StreamState(), {}
    for f in walk(1, 90, 16, attachment="bag"):
        state, _ = step_stream(state, f, small_model, timings=timings)
    assert set(timings) == {"normalize", "agi_update", "view_estimate", "removal", "predict"}
    assert all(t >= 0 for t in timings.values())


def test_push_normalized_keeps_window_bounded(small_model):
    state = StreamState()
    for f in walk(1, 18, 30):
        push_normalized(state, normalize(f), small_model)
        assert len(state.buffer) <= 14 and len(state._corrected) <= 15


def test_retraining_gives_identical_model_bytes(small_model, small_params):
    again = train_pipeline(synthetic_sequences(2, frames=16, seed=0), small_params)
    assert to_bytes(again) == to_bytes(small_model)
