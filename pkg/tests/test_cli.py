import json

import pytest

from gaitgender.cli import bench, main
from gaitgender.dataset import load_frame, save_frame
from gaitgender.modelfile import MODEL_ENV, load_model, save_model
from gaitgender.silhouette import normalize
from gaitgender.synth import generate_synthetic_walker


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, [json.loads(line) for line in out.splitlines() if line.startswith("{")], out, err


@pytest.fixture(scope="module")
def model_path(small_model, tmp_path_factory):
    return save_model(small_model, tmp_path_factory.mktemp("model") / "m.model")


@pytest.fixture
def walk_dir(tmp_path):
    d = tmp_path / "walk"
    d.mkdir()
    for t in range(16):
        save_frame(generate_synthetic_walker(1, 90, t, subject=1), d / f"{t + 1:03d}.png")
    return d


def test_train_writes_a_loadable_model(capsys, tmp_path):
    out = tmp_path / "t.model"
    code, docs, _, _ = run(capsys, "train", "--synthetic", 2, "--frames", 16, "--out", out)
    assert code == 0 and docs[0]["model"] == str(out) and len(docs[0]["views"]) == 11
    assert load_model(out).fingerprint == docs[0]["fingerprint"]


def test_classify_streams_one_line_per_decision(capsys, model_path, walk_dir):
    code, docs, _, _ = run(capsys, "classify", walk_dir, "--model", model_path)
    assert code == 0 and len(docs) == 2
    assert [d["frame"] for d in docs] == [14, 15]
    assert all(d["label"] == 1 and d["view"] == 90 and "latency_ms" in d for d in docs)


def test_classify_fewer_than_window_frames_emits_nothing(capsys, model_path, walk_dir):
    files = sorted(walk_dir.iterdir())[:14]
    code, docs, out, _ = run(capsys, "classify", *files, "--model", model_path)
    assert code == 0 and docs == [] and out == ""


def test_classify_uses_environment_model(capsys, model_path, walk_dir, monkeypatch):
    monkeypatch.setenv(MODEL_ENV, str(model_path))
    code, docs, _, _ = run(capsys, "classify", walk_dir)
    assert code == 0 and len(docs) == 2


def test_estimate_view(capsys, model_path, walk_dir):
    code, docs, _, _ = run(capsys, "estimate-view", walk_dir, "--model", model_path)
    assert code == 0 and docs[0]["view"] == 90 and docs[0]["frames"] == 16
    assert len(docs[0]["distances"]) == 11


def test_remove_attachment(capsys, model_path, tmp_path):
    src = tmp_path / "in.png"
    save_frame(normalize(generate_synthetic_walker(-1, 90, 4, subject=1, attachment="bag")), src)
    out, rep = tmp_path / "out.png", tmp_path / "rep.json"
    code, docs, _, _ = run(capsys, "remove-attachment", src, "--view", 90, "--out", out,
                           "--report", rep, "--model", model_path)
    assert code == 0 and docs[0]["removed_pixel_count"] > 0
    full = json.loads(rep.read_text())
    assert full["view"] == 90 and len(full["corrected_signal"]) == 360
    assert load_frame(src).sum() - load_frame(out).sum() == full["removed_pixel_count"]


def test_evaluate_crossvalidation_table(capsys):
    code, docs, out, _ = run(capsys, "evaluate", "--synthetic", 2, "--frames", 16, "--folds", 1)
    assert code == 0 and docs[0]["n_folds"] == 1
    head = out.splitlines()[0].split()
    assert sum(h.endswith("deg") for h in head) == 11 and head[-1] == "Avg"


def test_evaluate_saved_model(capsys, model_path):
    code, docs, out, err = run(capsys, "evaluate", "--model", model_path, "--synthetic", 2,
                               "--frames", 16, "--json-only")
    assert code == 0 and docs[0]["condition"] == "normal" and docs[0]["mean"] == 100.0
    assert "Avg" in err and "Avg" not in out


def test_synth_then_ingest(capsys, tmp_path):
    code, docs, _, _ = run(capsys, "synth", "--out", tmp_path / "d", "--subjects", 1, "--frames", 2,
                           "--conditions", "normal,bag")
    assert code == 0 and docs[0]["sequences"] == 44
    assert (tmp_path / "d" / "manifest.txt").is_file()


def test_bench_reports_stages(capsys, model_path):
    code, docs, _, err = run(capsys, "bench", "--model", model_path, "--frames", 20)
    assert code == 0
    doc = docs[0]
    assert set(doc["steady_ms"]) == {"normalize", "agi_update", "view_estimate", "removal", "predict", "total"}
    assert doc["budget_ms"] == 48 and "budget" in err


def test_bench_function_needs_frames_past_the_window(small_model):
    with pytest.raises(Exception, match="more than 15"):
        bench(small_model, frames=15)


def last_error(capsys):
    out, err = capsys.readouterr()
    assert out == ""
    return json.loads(err.strip().splitlines()[-1])


def test_missing_model_is_a_json_error(capsys, tmp_path):
    code = main(["classify", str(tmp_path / "missing.png"), "--model", str(tmp_path / "nope.model")])
    doc = last_error(capsys)
    assert code != 0 and doc["error"] == "FileNotFoundError" and doc["message"]


def test_unknown_view_is_a_json_error(capsys, tmp_path, model_path):
    save_frame(normalize(generate_synthetic_walker(1, 90, 0)), tmp_path / "x.png")
    code = main(["remove-attachment", str(tmp_path / "x.png"), "--view", "45", "--out", str(tmp_path / "o.png"),
                 "--model", str(model_path)])
    doc = last_error(capsys)
    assert code != 0 and doc["error"] == "UnknownView" and "45" in doc["message"]


def test_corrupt_model_is_reported(capsys, tmp_path, walk_dir, model_path):
    bad = tmp_path / "bad.model"
    data = bytearray(model_path.read_bytes())
    bad.write_bytes(bytes(data[:-5]))
    code = main(["classify", str(walk_dir), "--model", str(bad)])
    doc = last_error(capsys)
    assert code != 0 and doc["error"] == "ChecksumMismatch"


def test_data_source_required(capsys):
    with pytest.raises(SystemExit):
        main(["evaluate"])
    assert "--synthetic" in capsys.readouterr().err
