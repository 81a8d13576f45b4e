from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from scenesynth.errors import DimensionError
from scenesynth.frame_store import Frame

DEFAULT_WINDOW = 50


@dataclass(eq=False)
class BackgroundImage:
    pixels: np.ndarray
    source_window: tuple[int, int]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]


def temporal_median(stack: np.ndarray) -> np.ndarray:
    """Per-element median along axis 0 of a uint8 stack.

    For an even count the two middle values are averaged and rounded half up,
    so the result stays integral.
    """
    n = stack.shape[0]
    if n == 0:
        raise ValueError("empty stack")
    if n % 2:
        return np.partition(stack, n // 2, axis=0)[n // 2]
    part = np.partition(stack, (n // 2 - 1, n // 2), axis=0)
    lo = part[n // 2 - 1].astype(np.uint16)
    hi = part[n // 2].astype(np.uint16)
    return ((lo + hi + 1) // 2).astype(stack.dtype)


def median_background(frames: Sequence[Frame], window: int = DEFAULT_WINDOW) -> BackgroundImage:
    """Pixel-wise, per-channel median over the first ``window`` frames."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if len(frames) < window:
        raise ValueError(f"need {window} frames for the background, got {len(frames)}")
    used = frames[:window]
    shape = used[0].pixels.shape
    for f in used:
        if f.pixels.shape != shape:
            raise DimensionError(f"frame {f.index} has shape {f.pixels.shape}, expected {shape}")
    stack = np.stack([f.pixels for f in used])
    return BackgroundImage(temporal_median(stack), (used[0].index, used[-1].index))
