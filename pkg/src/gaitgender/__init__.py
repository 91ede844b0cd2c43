"""Multi-view gender classification from walking silhouettes.

Per-view average-gait-image classifiers, viewpoint estimation from the
lower-body band, and envelope-based removal of bags and coats.
"""

from .attachment import CorrectionReport, correct_signal, reconstruct, remove_attachment
from .dataset import GaitSequence, export, ingest
from .distance_signal import DistanceSignal, DSModel, build_ds, build_ds_model, smooth
from .errors import GaitError
from .evaluation import EvalReport, crossvalidate, crossvalidate_many, evaluate_model, format_table
from .features import compute_agi, extract_lower
from .modelfile import load_model, save_model
from .pipeline import PipelineParams, StreamState, TrainedModel, step_stream, train_pipeline
from .silhouette import centroid, normalize, raw_moment, trace_contour
from .svm import ClassifierBank, LinearClassifier, train, train_bank
from .synth import generate_synthetic_walker, synthetic_sequences
from .viewpoint import VPModel, build_vp_model, estimate_viewpoint

__version__ = "0.1.0"

__all__ = [
    "CorrectionReport", "ClassifierBank", "DSModel", "DistanceSignal", "EvalReport", "GaitError",
    "GaitSequence", "LinearClassifier", "PipelineParams", "StreamState", "TrainedModel", "VPModel",
    "build_ds", "build_ds_model", "build_vp_model", "centroid", "compute_agi", "correct_signal",
    "crossvalidate", "crossvalidate_many", "estimate_viewpoint", "evaluate_model", "export",
    "extract_lower", "format_table", "generate_synthetic_walker", "ingest", "load_model", "normalize",
    "raw_moment", "reconstruct", "remove_attachment", "save_model", "smooth", "step_stream",
    "synthetic_sequences", "trace_contour", "train", "train_bank", "train_pipeline",
]
