"""Average gait image (AGI) over a frame window and its lower band."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyWindow, ShapeMismatch

LOWER_BAND_START = 0.715


@dataclass(frozen=True)
class GaitWindowParams:
    frame_rate: float = 25.0
    cycle_time: float = 0.6

    @property
    def window(self) -> int:
        """Frames per AGI: round(cycle_time * frame_rate), at least 1."""
        return max(1, math.floor(self.cycle_time * self.frame_rate + 0.5))


def lower_start(height: int) -> int:
    return math.floor(LOWER_BAND_START * height)


def compute_agi(frames) -> np.ndarray:
    """Pixelwise mean of a list of equally sized binary masks."""
    frames = list(frames)
    if not frames:
        raise EmptyWindow("AGI needs at least one frame")
    shape = np.shape(frames[0])
    acc = np.zeros(shape, dtype=np.int64)
    for f in frames:
        if np.shape(f) != shape:
            raise ShapeMismatch(f"frame shape {np.shape(f)} != {shape}")
        acc += np.asarray(f, dtype=bool)
    return acc / len(frames)


def extract_lower(agi) -> np.ndarray:
    """Rows floor(0.715 h) .. h-1 of an AGI (or of a single silhouette)."""
    agi = np.asarray(agi)
    return agi[lower_start(agi.shape[0]) :]


class SlidingAGI:
    """Running-sum AGI over the most recent frames.

    Single owner; appending and evicting are O(pixels) instead of O(T * pixels).
    """

    def __init__(self, shape):
        self.shape = tuple(shape)
        self._frames = deque()
        self._sum = np.zeros(self.shape, dtype=np.int32)

    def __len__(self):
        return len(self._frames)

    def append(self, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.shape:
            raise ShapeMismatch(f"frame shape {mask.shape} != {self.shape}")
        self._frames.append(mask)
        self._sum += mask

    def popleft(self):
        mask = self._frames.popleft()
        self._sum -= mask
        return mask

    def clear(self):
        self._frames.clear()
        self._sum[:] = 0

    @property
    def frames(self):
        return list(self._frames)

    def mean(self) -> np.ndarray:
        if not self._frames:
            raise EmptyWindow("no frames buffered")
        return self._sum / len(self._frames)
