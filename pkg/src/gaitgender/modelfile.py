"""Single-file model container.

Layout::

    b"GAITMDL\\0"                      8-byte magic
    u32 little-endian                  header length in bytes
    header                             UTF-8 JSON, sorted keys
    array payload                      little-endian float64, row-major,
                                       in header["arrays"] order
    32 bytes                           SHA-256 of everything above

The header holds the format version, the pipeline parameters, the training
seed, the dataset fingerprint, per-view metadata and an ``arrays`` list of
``{"name", "shape", "offset"}`` descriptors (offsets are relative to the
start of the payload). Writing is deterministic: identical models give
identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .distance_signal import DSModel
from .errors import ChecksumMismatch, ShapeInconsistency, VersionMismatch
from .pipeline import PipelineParams, TrainedModel
from .svm import ClassifierBank, LinearClassifier
from .viewpoint import VPModel

MAGIC = b"GAITMDL\0"
FORMAT_VERSION = 1
MODEL_ENV = "GAITGENDER_MODEL"
DEFAULT_MODEL_NAME = "gaitgender.model"
_LEN = struct.Struct("<I")
_DIGEST = 32
_F64 = np.dtype("<f8")


def default_model_path() -> Path:
    return Path(os.environ.get(MODEL_ENV, DEFAULT_MODEL_NAME))


def _arrays(model: TrainedModel):
    views = model.params.views
    yield "vp.templates", model.vp.templates
    yield "ds.maxds", model.ds.maxds
    yield "ds.minds", model.ds.minds
    yield "svm.weights", np.stack([model.bank[v].weights for v in views])
    yield "svm.bias", np.array([model.bank[v].bias for v in views])


def to_bytes(model: TrainedModel) -> bytes:
    payload = bytearray()
    descriptors = []
    for name, arr in _arrays(model):
        arr = np.ascontiguousarray(arr, dtype=_F64)
        descriptors.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload += arr.tobytes()
    header = {
        "format_version": FORMAT_VERSION,
        "params": model.params.to_dict(),
        "seed": model.params.seed,
        "fingerprint": model.fingerprint,
        "views": [int(v) for v in model.params.views],
        "vp": {"views": [int(v) for v in model.vp.views], "norm_shape": list(model.vp.norm_shape)},
        "ds": {"views": [int(v) for v in model.ds.views], "n_avg": model.ds.n_avg,
               "envelope": "pointwise max/min over all training frames of all subjects, per view"},
        "svm": {"n_iter": [model.bank[v].n_iter for v in model.params.views]},
        "arrays": descriptors,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = MAGIC + _LEN.pack(len(head)) + head + bytes(payload)
    return body + hashlib.sha256(body).digest()


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    data = to_bytes(model)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return path


def read_header(data: bytes) -> tuple:
    """Verify the checksum and return ``(header, payload)``."""
    if len(data) < len(MAGIC) + _LEN.size + _DIGEST:
        raise ChecksumMismatch("model file is truncated")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatch("model file checksum does not match (corrupt or truncated)")
    if body[: len(MAGIC)] != MAGIC:
        raise ChecksumMismatch("not a model file (bad magic)")
    (n,) = _LEN.unpack_from(body, len(MAGIC))
    start = len(MAGIC) + _LEN.size
    header = json.loads(body[start : start + n].decode())
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model file format {version}, this build reads {FORMAT_VERSION}")
    return header, body[start + n :]


def from_bytes(data: bytes) -> TrainedModel:
    header, payload = read_header(data)
    arrays = {}
    for d in header["arrays"]:
        shape = tuple(d["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = d["offset"] + count * _F64.itemsize
        if end > len(payload):
            raise ShapeInconsistency(f"array {d['name']} runs past the end of the payload")
        arrays[d["name"]] = np.frombuffer(payload, _F64, count, d["offset"]).reshape(shape).astype(np.float64)

    params = PipelineParams.from_dict(header["params"])
    views = tuple(params.views)
    _check_shapes(header, arrays, params)
    vp = VPModel(tuple(header["vp"]["views"]), arrays["vp.templates"], tuple(header["vp"]["norm_shape"]))
    ds = DSModel(tuple(header["ds"]["views"]), arrays["ds.maxds"], arrays["ds.minds"], header["ds"]["n_avg"])
    n_iter = header["svm"]["n_iter"]
    bank = ClassifierBank({
        v: LinearClassifier(arrays["svm.weights"][i].copy(), float(arrays["svm.bias"][i]), v, n_iter[i])
        for i, v in enumerate(views)
    })
    return TrainedModel(params, vp, ds, bank, header["fingerprint"])


def _check_shapes(header, arrays, params):
    n = len(params.views)
    h, w = params.shape
    missing = {"vp.templates", "ds.maxds", "ds.minds", "svm.weights", "svm.bias"} - set(arrays)
    if missing:
        raise ShapeInconsistency(f"missing arrays: {sorted(missing)}")
    if list(header["vp"]["views"]) != list(params.views) or list(header["ds"]["views"]) != list(params.views):
        raise ShapeInconsistency("sub-model view sets disagree with params")
    t = arrays["vp.templates"]
    if t.ndim != 3 or t.shape[0] != n or t.shape[2] != w or t.shape[1] > h:
        raise ShapeInconsistency(f"vp.templates {t.shape} inconsistent with {n} views of {h}x{w}")
    for name in ("ds.maxds", "ds.minds"):
        a = arrays[name]
        if a.shape != (n, params.bins):
            raise ShapeInconsistency(f"{name} {a.shape} != ({n}, {params.bins})")
    if arrays["svm.weights"].shape != (n, h * w):
        raise ShapeInconsistency(f"svm.weights {arrays['svm.weights'].shape} != ({n}, {h * w})")
    if arrays["svm.bias"].shape != (n,):
        raise ShapeInconsistency(f"svm.bias {arrays['svm.bias'].shape} != ({n},)")
    if len(header["svm"]["n_iter"]) != n:
        raise ShapeInconsistency("svm.n_iter length differs from the view count")


def load_model(path=None) -> TrainedModel:
    path = default_model_path() if path is None else Path(path)
    return from_bytes(path.read_bytes())


def load_params(path) -> PipelineParams:
    """Params from a model file, or from a config JSON holding either a bare
    params object or a model-header-shaped object with a ``params`` key."""
    data = Path(path).read_bytes()
    if data.startswith(MAGIC):
        return PipelineParams.from_dict(read_header(data)[0]["params"])
    d = json.loads(data.decode())
    return PipelineParams.from_dict(d.get("params", d) if isinstance(d, dict) else d)
