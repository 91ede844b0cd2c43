"""Viewpoint templates built from lower-body averages, and nearest-template lookup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingView, ShapeMismatch
from .features import extract_lower

DEFAULT_VIEWS = tuple(range(0, 181, 18))


@dataclass(frozen=True)
class VPModel:
    views: tuple
    templates: np.ndarray  # (n_views, lower_rows, width)
    norm_shape: tuple

    def template(self, view) -> np.ndarray:
        return self.templates[self.views.index(view)]


def build_vp_model(training, views=DEFAULT_VIEWS, norm_shape=None) -> VPModel:
    """Average the lower band of every training silhouette, per view.

    ``training`` maps view -> iterable of normalized masks.
    """
    views = tuple(sorted(views))
    templates = []
    for v in views:
        acc = None
        n = 0
        for mask in training.get(v, ()):
            low = extract_lower(np.asarray(mask, dtype=bool))
            if acc is None:
                acc = np.zeros(low.shape, dtype=np.int64)
                if norm_shape is None:
                    norm_shape = np.shape(mask)
            elif low.shape != acc.shape:
                raise ShapeMismatch(f"view {v}: lower band {low.shape} != {acc.shape}")
            acc += low
            n += 1
        if n == 0:
            raise MissingView(v)
        templates.append(acc / n)
    shapes = {t.shape for t in templates}
    if len(shapes) != 1:
        raise ShapeMismatch(f"templates disagree in shape: {sorted(shapes)}")
    return VPModel(views, np.stack(templates), tuple(norm_shape))


def template_distances(probe, model: VPModel) -> np.ndarray:
    probe = np.asarray(probe, dtype=np.float64)
    if probe.shape != model.templates.shape[1:]:
        raise ShapeMismatch(f"probe {probe.shape} != template {model.templates.shape[1:]}")
    diff = model.templates.reshape(len(model.views), -1) - probe.reshape(1, -1)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def estimate_viewpoint(probe, model: VPModel):
    """View whose template is nearest in Euclidean distance; ties go to the smallest angle."""
    # views are stored ascending and argmin returns the first minimum
    return model.views[int(np.argmin(template_distances(probe, model)))]
