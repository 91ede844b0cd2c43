"""Binary silhouette primitives: moments, centroid, normalization and contours.

Masks are 2-D boolean numpy arrays indexed ``mask[row, col]``. Geometric
quantities use ``x`` for the column and ``y`` for the row, so a point is
``(x, y)``. Polar angles are measured counterclockwise *as seen on screen*,
i.e. with the row axis flipped so that "up" is +90 degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DegenerateBox, EmptySilhouette, ShapeMismatch

DEFAULT_HEIGHT = 144
DEFAULT_WIDTH = 144
FOREGROUND_THRESHOLD = 127

_EIGHT = np.ones((3, 3), dtype=bool)


class Centroid(NamedTuple):
    x: float
    y: float


class Box(NamedTuple):
    """Half-open pixel rectangle ``[top, bottom) x [left, right)``."""

    top: int
    left: int
    bottom: int
    right: int


def round_half_up(v):
    return math.floor(v + 0.5)


def as_mask(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"silhouette must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("silhouette must be at least 1x1")
    return a.astype(bool, copy=False)


def from_grayscale(img) -> np.ndarray:
    """Threshold an 8-bit grayscale image; pixels above 127 are foreground."""
    return np.asarray(img) > FOREGROUND_THRESHOLD


def raw_moment(mask, i: int, j: int) -> float:
    """Raw image moment: sum of x**i * y**j over foreground pixels."""
    ys, xs = np.nonzero(as_mask(mask))
    if xs.size == 0:
        return 0.0
    xs = xs.astype(np.int64)
    ys = ys.astype(np.int64)
    return float(np.sum(xs**i * ys**j))


def centroid(mask) -> Centroid:
    mask = as_mask(mask)
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptySilhouette("silhouette has no foreground pixels")
    m00 = xs.size
    return Centroid(float(xs.sum()) / m00, float(ys.sum()) / m00)


def largest_component(mask) -> np.ndarray:
    """Keep only the largest 8-connected foreground component."""
    mask = as_mask(mask)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n <= 1:
        return mask.copy()
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    # ties resolve to the lowest label, i.e. first in raster order
    return labels == int(np.argmax(sizes))


def bounding_box(mask) -> Box | None:
    mask = as_mask(mask)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return Box(int(rows[0]), int(cols[0]), int(rows[-1]) + 1, int(cols[-1]) + 1)


@dataclass(frozen=True)
class NormTransform:
    """Resampling produced by :func:`normalize`.

    Output pixel ``(i, j)`` is foreground when at least half of its footprint
    in the source is: ``coverage = rows @ mask @ cols.T`` with ``rows``
    (H x source height) and ``cols`` (W x source width) holding overlap weights
    that sum to one per output line.
    """

    rows: np.ndarray
    cols: np.ndarray

    @property
    def height(self):
        return self.rows.shape[0]

    @property
    def width(self):
        return self.cols.shape[0]

    def coverage(self, mask) -> np.ndarray:
        mask = as_mask(mask).astype(np.float64)
        if mask.shape != (self.rows.shape[1], self.cols.shape[1]):
            raise ShapeMismatch(f"mask {mask.shape} != source {(self.rows.shape[1], self.cols.shape[1])}")
        return self.rows @ mask @ self.cols.T

    def apply(self, mask) -> np.ndarray:
        """Map another mask of the same source size through this transform."""
        # a hair below 1/2 so exact half coverage survives float round-off
        return self.coverage(mask) >= 0.5 - 1e-9


def _place(strip, offset, width):
    out = np.zeros((strip.shape[0], width), dtype=bool)
    lo = max(0, offset)
    hi = min(width, offset + strip.shape[1])
    if hi > lo:
        out[:, lo:hi] = strip[:, lo - offset : hi - offset]
    return out


def _overlap(start, step, n_out, n_src):
    """Weights of source pixels [k, k+1) inside output windows [start + i*step, start + (i+1)*step)."""
    lo = start + np.arange(n_out) * step
    hi = lo + step
    edges = np.arange(n_src + 1, dtype=np.float64)
    w = np.clip(np.minimum(hi[:, None], edges[None, 1:]) - np.maximum(lo[:, None], edges[None, :-1]), 0.0, None)
    return w / step


def normalize_with_transform(
    mask, box: Box | None = None, height: int = DEFAULT_HEIGHT, width: int = DEFAULT_WIDTH
) -> tuple[np.ndarray, NormTransform]:
    mask = as_mask(mask)
    if box is not None:
        top, left, bottom, right = box
        if bottom <= top or right <= left:
            raise DegenerateBox(f"box {tuple(box)} has no area")
        region = np.zeros_like(mask)
        region[max(top, 0) : bottom, max(left, 0) : right] = mask[
            max(top, 0) : bottom, max(left, 0) : right
        ]
        mask = region
    if not mask.any():
        raise EmptySilhouette("no foreground inside the box")
    mask = largest_component(mask)
    tight = bounding_box(mask)
    src_h = tight.bottom - tight.top

    # pixel k spans [k, k+1); one scale for both axes keeps the aspect ratio.
    # Rows: the tight extent maps onto the full height. Columns: the centroid
    # (pixel centre at x + 0.5) lands on the centre of output column W/2.
    step = src_h / height
    cx = centroid(mask).x + 0.5
    rows = _overlap(float(tight.top), step, height, mask.shape[0])
    cols = _overlap(cx - (width / 2 + 0.5) * step, step, width, mask.shape[1])
    tr = NormTransform(rows, cols)
    return tr.apply(mask), tr


def normalize(mask, box: Box | None = None, height: int = DEFAULT_HEIGHT, width: int = DEFAULT_WIDTH):
    """Crop, rescale to a fixed height and center on the centroid column.

    Nearest-neighbour resampling keeps the output strictly binary. Only the
    largest 8-connected component inside ``box`` is kept.
    """
    return normalize_with_transform(mask, box, height, width)[0]


def recenter(mask) -> np.ndarray:
    """Shift a fixed-size silhouette horizontally so its centroid column sits at W/2."""
    mask = as_mask(mask)
    cx = centroid(mask).x
    shift = round_half_up(mask.shape[1] / 2 - cx)
    if shift == 0:
        return mask.copy()
    return _place(mask, shift, mask.shape[1])


# Clockwise on screen, starting north. (drow, dcol)
_MOORE = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_MOORE_INDEX = {d: k for k, d in enumerate(_MOORE)}
_WEST = 6


def _moore_trace(pad, r0, c0):
    """Outer 8-connected boundary, clockwise on screen, from the raster-first pixel."""
    path = [(r0, c0)]
    r, c, back = r0, c0, _WEST
    first_step = None
    while True:
        nxt = None
        for k in range(1, 9):
            d = (back + k) & 7
            dr, dc = _MOORE[d]
            if pad[r + dr][c + dc]:
                pr, pc = _MOORE[(d - 1) & 7]
                nxt = (r + dr, c + dc, _MOORE_INDEX[(pr - dr, pc - dc)])
                break
        if nxt is None:  # isolated pixel
            return path
        # leaving the start pixel towards the first step again closes the loop
        if first_step is None:
            first_step = nxt[:2]
        elif (r, c) == (r0, c0) and nxt[:2] == first_step:
            path.pop()
            return path
        r, c, back = nxt
        path.append((r, c))


def _fill_diagonals(pad, path):
    # a diagonal Moore step can skip a foreground pixel that still touches the
    # outside background through a corner; insert it so every such pixel is kept
    out = []
    n = len(path)
    for k in range(n):
        r, c = path[k]
        out.append((r, c))
        if n == 1:
            break
        r2, c2 = path[(k + 1) % n]
        if r2 != r and c2 != c:
            a = pad[r][c2]
            b = pad[r2][c]
            if a and not b:
                out.append((r, c2))
            elif b and not a:
                out.append((r2, c))
    return out


def trace_contour(mask, c: Centroid | None = None) -> np.ndarray:
    """Outer boundary of the largest component as an ``(N, 2)`` array of (x, y).

    Points run counterclockwise on screen and start at the boundary point
    closest in angle to the horizontal ray pointing right from the centroid.
    """
    mask = largest_component(mask)
    if not mask.any():
        raise EmptySilhouette("cannot trace an empty silhouette")
    pad = np.pad(mask, 1).tolist()
    flat = int(np.flatnonzero(mask.ravel())[0])
    r0, c0 = divmod(flat, mask.shape[1])
    path = _fill_diagonals(pad, _moore_trace(pad, r0 + 1, c0 + 1))
    pts = np.array(path, dtype=np.int64)[:, ::-1] - 1  # (x, y)
    if len(pts) == 1:
        return pts
    pts = pts[::-1]  # clockwise on screen -> counterclockwise

    if c is None:
        c = centroid(mask)
    ang = np.arctan2(c.y - pts[:, 1], pts[:, 0] - c.x)
    dist = np.hypot(pts[:, 0] - c.x, pts[:, 1] - c.y)
    # smallest |angle|, outermost point on ties
    order = np.lexsort((-dist, np.round(np.abs(ang), 12)))
    return np.roll(pts, -int(order[0]), axis=0)
