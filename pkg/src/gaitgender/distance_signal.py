"""Polar boundary signature around the centroid, and per-view min/max envelopes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvenWindow, MissingView, ShapeMismatch
from .silhouette import Centroid, centroid, largest_component, trace_contour

DEFAULT_BINS = 360
DEFAULT_SMOOTHING = 3


@dataclass(frozen=True)
class DistanceSignal:
    """``values[k]`` is the boundary distance at angle ``k * 360 / B`` degrees."""

    values: np.ndarray
    origin: Centroid

    def __len__(self):
        return len(self.values)


def polar_coords(xs, ys, c: Centroid, bins: int = DEFAULT_BINS):
    """Distance and angular bin of points around ``c``.

    Bin ``k`` covers angles ``[k - 0.5, k + 0.5)`` in units of ``360 / bins``.
    """
    dx = np.asarray(xs, dtype=np.float64) - c.x
    dy = c.y - np.asarray(ys, dtype=np.float64)
    dist = np.hypot(dx, dy)
    theta = np.mod(np.degrees(np.arctan2(dy, dx)), 360.0)
    k = np.floor(theta * (bins / 360.0) + 0.5).astype(np.int64) % bins
    return dist, k


def fill_circular(values) -> np.ndarray:
    """Fill NaN bins by linear interpolation between the nearest valid bins, wrapping around."""
    values = np.asarray(values, dtype=np.float64)
    ok = ~np.isnan(values)
    if ok.all():
        return values.copy()
    if not ok.any():
        raise ValueError("signal has no valid bins")
    idx = np.arange(len(values))
    return np.interp(idx, idx[ok], values[ok], period=len(values))


def build_ds(mask, bins: int = DEFAULT_BINS, c: Centroid | None = None) -> DistanceSignal:
    """Distance signal of the outer contour.

    Each bin keeps the largest contour distance falling in it, so non-star
    shapes report their outermost boundary. Empty bins are interpolated.
    """
    mask = largest_component(mask)
    if c is None:
        c = centroid(mask)
    pts = trace_contour(mask, c)
    dist, k = polar_coords(pts[:, 0], pts[:, 1], c, bins)
    out = np.full(bins, -np.inf)
    np.maximum.at(out, k, dist)
    out[np.isinf(out)] = np.nan
    return DistanceSignal(fill_circular(out), c)


def _values(signal):
    return signal.values if isinstance(signal, DistanceSignal) else np.asarray(signal, dtype=np.float64)


def smooth(signal, window: int = DEFAULT_SMOOTHING):
    """Circular moving average with an odd window; returns the same type it was given."""
    if window < 1 or window % 2 == 0:
        raise EvenWindow(f"smoothing window must be odd and >= 1, got {window}")
    v = _values(signal)
    if window == 1:
        out = v.copy()
    else:
        h = window // 2
        padded = np.concatenate([v[-h:], v, v[:h]])
        out = np.convolve(padded, np.ones(window) / window, mode="valid")
    if isinstance(signal, DistanceSignal):
        return DistanceSignal(out, signal.origin)
    return out


@dataclass(frozen=True)
class DSModel:
    views: tuple
    maxds: np.ndarray  # (n_views, bins)
    minds: np.ndarray
    n_avg: int = DEFAULT_SMOOTHING

    @property
    def bins(self) -> int:
        return self.maxds.shape[1]

    def envelope(self, view):
        try:
            i = self.views.index(view)
        except ValueError:
            raise MissingView(view, "not in DS model") from None
        return self.maxds[i], self.minds[i]


def build_ds_model(per_view_signals, views=None, n_avg: int = DEFAULT_SMOOTHING) -> DSModel:
    """Pointwise max/min over every (already smoothed) training signal of each view.

    All frames of all training subjects of a view are pooled together.
    """
    views = tuple(sorted(per_view_signals if views is None else views))
    hi, lo = [], []
    bins = None
    for v in views:
        mx = mn = None
        for s in per_view_signals.get(v, ()):
            s = _values(s)
            if mx is None:
                mx, mn = s.copy(), s.copy()
                if bins is None:
                    bins = len(s)
            if len(s) != bins:
                raise ShapeMismatch(f"view {v}: signal length {len(s)} != {bins}")
            np.maximum(mx, s, out=mx)
            np.minimum(mn, s, out=mn)
        if mx is None:
            raise MissingView(v)
        hi.append(mx)
        lo.append(mn)
    return DSModel(views, np.stack(hi), np.stack(lo), n_avg)
