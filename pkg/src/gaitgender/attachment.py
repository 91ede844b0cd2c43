"""Detect and remove carried items or bulky clothing using the per-view DS envelopes.

The torso/thigh band of the distance signal is compared with the view's
envelope. Stretches above the maximum curve are pulled down to the minimum
curve, extended to the point where the signal next comes closest to the
minimum, smoothed, and the silhouette is cut back along the corrected rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .distance_signal import DSModel, DistanceSignal, build_ds, polar_coords, smooth
from .errors import EmptySilhouette, MissingView, ShapeMismatch, UnknownView
from .silhouette import Centroid, as_mask, bounding_box, centroid

HEAD_END = 0.17
TORSO_END = 0.715
CORRECTION_FILTER = 5


@dataclass(frozen=True)
class BodyPartBands:
    """Row bands of a silhouette of height ``height``; boundaries are floored."""

    height: int

    @property
    def head(self):
        return 0, math.floor(HEAD_END * self.height)

    @property
    def torso(self):
        return math.floor(HEAD_END * self.height), math.floor(TORSO_END * self.height)

    @property
    def calf(self):
        return math.floor(TORSO_END * self.height), self.height


@dataclass(frozen=True)
class CorrectionReport:
    corrected_signal: DistanceSignal
    violating_runs: list = field(default_factory=list)  # (first replaced bin, C)
    corrected_bins: np.ndarray | None = None  # bins cut back to the minimum envelope
    removed_pixel_count: int = 0

    def to_json(self) -> dict:
        return {
            "violating_runs": [[int(a), int(b)] for a, b in self.violating_runs],
            "removed_pixel_count": int(self.removed_pixel_count),
            "corrected_signal": [float(v) for v in self.corrected_signal.values],
            "origin": [float(self.corrected_signal.origin.x), float(self.corrected_signal.origin.y)],
        }


@lru_cache(maxsize=8)
def _directions(bins: int):
    theta = np.radians(np.arange(bins) * (360.0 / bins))
    return np.cos(theta), np.sin(theta)


def ray_cast(mask, c: Centroid, bins: int = 360, step: float = 0.5):
    """Outermost foreground pixel along each bin's ray.

    Returns ``(distance, row)`` arrays; rays that never hit give ``nan`` / -1.
    """
    mask = as_mask(mask)
    h, w = mask.shape
    box = bounding_box(mask)
    if box is None:
        return np.full(bins, np.nan), np.full(bins, -1)
    # no hit can lie beyond the farthest corner of the foreground box
    reach = max(math.hypot(x - c.x, y - c.y) for x in (box.left, box.right) for y in (box.top, box.bottom))
    r = np.arange(0.0, reach + 1.0, step)
    cos, sin = _directions(bins)
    # nearest pixel: floor(v + 0.5); samples never reach below -reach, so an
    # offset makes truncation equal to floor
    off = math.ceil(reach) + 2
    xs = (c.x + 0.5 + off + cos[:, None] * r).astype(np.int32) - off
    ys = (c.y + 0.5 + off - sin[:, None] * r).astype(np.int32) - off
    # off-image samples read a trailing background sentinel
    flat = np.append(mask.ravel(), False)
    idx = np.where((xs >= 0) & (xs < w) & (ys >= 0) & (ys < h), ys * w + xs, h * w)
    hit = flat[idx]
    any_hit = hit.any(axis=1)
    last = hit.shape[1] - 1 - np.argmax(hit[:, ::-1], axis=1)
    rows_idx = np.arange(bins)
    hx = xs[rows_idx, last]
    hy = ys[rows_idx, last]
    dist = np.where(any_hit, np.hypot(hx - c.x, hy - c.y), np.nan)
    row = np.where(any_hit, hy, -1)
    return dist, row


def torso_angular_range(mask, c: Centroid | None = None, bins: int = 360) -> np.ndarray:
    """Boolean mask over bins whose outermost ray hit lies in the torso/thigh row band."""
    mask = as_mask(mask)
    if not mask.any():
        raise EmptySilhouette("empty silhouette")
    if c is None:
        c = centroid(mask)
    lo, hi = BodyPartBands(mask.shape[0]).torso
    _, row = ray_cast(mask, c, bins)
    return (row >= lo) & (row < hi)


def circular_segments(flags) -> list:
    """Contiguous runs of True as index arrays, in increasing (counterclockwise) order.

    A run crossing the last bin continues at bin 0.
    """
    flags = np.asarray(flags, dtype=bool)
    n = len(flags)
    if flags.all():
        return [np.arange(n)]
    if not flags.any():
        return []
    start = int(np.argmin(flags))  # a False bin; rotate so no run wraps
    rolled = np.roll(flags, -start)
    segs = []
    k = 0
    while k < n:
        if rolled[k]:
            j = k
            while j + 1 < n and rolled[j + 1]:
                j += 1
            segs.append((np.arange(k, j + 1) + start) % n)
            k = j + 1
        else:
            k += 1
    return segs


def _box_smooth(v, width):
    # shrinking window at both ends: no leakage outside the segment
    h = width // 2
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(len(v))
    lo = np.maximum(idx - h, 0)
    hi = np.minimum(idx + h + 1, len(v))
    return (csum[hi] - csum[lo]) / (hi - lo)


def correct_signal(ds, view, model: DSModel, torso_bins) -> CorrectionReport:
    """Apply the envelope correction rule to the torso segments of ``ds``.

    Inside each torso segment, bins above the maximum envelope are replaced by
    the minimum envelope; the replacement is extended from the end of the run
    to the bin (up to the segment end) where the signal is closest to the
    minimum envelope, and the segment is box-filtered. Bins below the minimum
    envelope anywhere are raised to it.
    """
    if not isinstance(ds, DistanceSignal):
        ds = DistanceSignal(np.asarray(ds, dtype=np.float64), Centroid(0.0, 0.0))
    try:
        mx, mn = model.envelope(view)
    except MissingView:
        raise UnknownView(f"view {view} is not in the DS model") from None
    torso_bins = np.asarray(torso_bins, dtype=bool)
    if len(ds.values) != model.bins or len(torso_bins) != model.bins:
        raise ShapeMismatch(f"signal has {len(ds.values)} bins, model has {model.bins}")

    sig = ds.values.astype(np.float64, copy=True)
    corrected = np.zeros(model.bins, dtype=bool)
    runs = []
    for seg in circular_segments(torso_bins):
        vals = sig[seg]
        smax, smin = mx[seg], mn[seg]
        above = vals > smax
        if not above.any():
            continue
        n = len(seg)
        i = 0
        while i < n:
            if not above[i]:
                i += 1
                continue
            j = i
            while j + 1 < n and above[j + 1]:
                j += 1
            vals[i : j + 1] = smin[i : j + 1]
            # C: first closest approach to MiDS after the run end A, before the segment end
            if j + 1 < n:
                gap = np.abs(vals[j + 1 :] - smin[j + 1 :])
                up = np.flatnonzero(np.diff(gap) > 0)
                c = j + 1 + (int(up[0]) if up.size else len(gap) - 1)
            else:
                c = j
            vals[j + 1 : c + 1] = smin[j + 1 : c + 1]
            corrected[seg[i : c + 1]] = True
            runs.append((int(seg[i]), int(seg[c])))
            i = c + 1
        vals = np.minimum(_box_smooth(vals, CORRECTION_FILTER), smax)
        sig[seg] = vals
    np.maximum(sig, mn, out=sig)
    return CorrectionReport(DistanceSignal(sig, ds.origin), runs, corrected)


def reconstruct(mask, report: CorrectionReport, c: Centroid | None = None) -> np.ndarray:
    """Delete foreground pixels beyond the corrected distance on every cut-back ray.

    Removal only: bins that were raised to the minimum envelope add nothing.
    """
    mask = as_mask(mask)
    if not report.violating_runs or report.corrected_bins is None or not report.corrected_bins.any():
        return mask.copy()
    if c is None:
        c = report.corrected_signal.origin
    sig = report.corrected_signal.values
    ys, xs = np.nonzero(mask)
    dist, k = polar_coords(xs, ys, c, len(sig))
    cut = report.corrected_bins[k] & (dist > sig[k])
    out = mask.copy()
    out[ys[cut], xs[cut]] = False
    return out


def _trim_to_max(mask, maxds, model: DSModel, c: Centroid) -> np.ndarray:
    # shave only what lies beyond MaDS on torso rays; never cuts into the body envelope
    ds = smooth(build_ds(mask, model.bins, c), model.n_avg)
    over = torso_angular_range(mask, c, model.bins) & (ds.values > maxds)
    if not over.any():
        return mask
    capped = DistanceSignal(np.minimum(ds.values, maxds), c)
    return reconstruct(mask, CorrectionReport(capped, [(0, 0)], over), c)


def remove_attachment(mask, view, model: DSModel, passes: int = 5, settle: float = 0.1):
    """Full per-frame correction. Returns ``(corrected_mask, report)``.

    A large attachment drags the centroid towards itself, which inflates the
    opposite side of the signal. Before correcting, the centroid is therefore
    re-estimated from the silhouette with everything beyond MaDS shaved off,
    up to ``passes`` times or until it moves less than ``settle`` pixels. The
    shave is only used to locate the centroid; the correction itself runs once
    on the original mask.
    """
    mask = as_mask(mask)
    try:
        maxds = model.envelope(view)[0]
    except MissingView:
        raise UnknownView(f"view {view} is not in the DS model") from None
    c = centroid(mask)
    for _ in range(max(0, passes)):
        trimmed = _trim_to_max(mask, maxds, model, c)
        if trimmed is mask or not trimmed.any():
            break
        cn = centroid(trimmed)
        moved = max(abs(cn.x - c.x), abs(cn.y - c.y))
        c = cn
        if moved < settle:
            break
    ds = smooth(build_ds(mask, model.bins, c), model.n_avg)
    report = correct_signal(ds, view, model, torso_angular_range(mask, c, model.bins))
    out = reconstruct(mask, report, c)
    removed = int(mask.sum()) - int(out.sum())
    return out, replace(report, removed_pixel_count=removed)
