"""Weak foreground masks: a built-in differencing detector or external masks.

The built-in detector is intentionally crude. Masks produced by a stronger
unsupervised segmenter can be dropped in as ``bin%06d.png`` files instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from scenesynth.background_model import BackgroundImage
from scenesynth.errors import DimensionError
from scenesynth.frame_store import FOREGROUND, Frame, frame_name, load_label_mask, write_image


@dataclass(eq=False)
class BinaryMask:
    pixels: np.ndarray
    frame_index: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class DetectorParams:
    threshold: int = 30
    open_radius: int = 1
    close_radius: int = 1

    def __post_init__(self):
        if not 1 <= self.threshold <= 255:
            raise ValueError(f"threshold must be in [1, 255], got {self.threshold}")
        if self.open_radius < 0 or self.close_radius < 0:
            raise ValueError("structuring element radii must be >= 0")


def disc(radius: int) -> np.ndarray:
    """Boolean disc of pixels with dx^2 + dy^2 <= radius^2."""
    r = np.arange(-radius, radius + 1)
    return (r[:, None] ** 2 + r[None, :] ** 2) <= radius * radius


def subtract(frame: Frame, bg: BackgroundImage, params: DetectorParams) -> BinaryMask:
    if frame.pixels.shape != bg.pixels.shape:
        raise DimensionError(f"frame {frame.pixels.shape} vs background {bg.pixels.shape}")
    diff = np.abs(frame.pixels.astype(np.int16) - bg.pixels.astype(np.int16)).max(axis=2)
    return BinaryMask(diff > params.threshold, frame.index)


# Out-of-raster pixels count as foreground for erosion and background for
# dilation, which keeps opening anti-extensive and closing extensive.
def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius == 0:
        return mask.copy()
    out = cv2.erode(mask.astype(np.uint8), disc(radius).astype(np.uint8),
                    borderType=cv2.BORDER_CONSTANT, borderValue=1)
    return out.astype(bool)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius == 0:
        return mask.copy()
    out = cv2.dilate(mask.astype(np.uint8), disc(radius).astype(np.uint8),
                     borderType=cv2.BORDER_CONSTANT, borderValue=0)
    return out.astype(bool)


def opening(mask: np.ndarray, radius: int) -> np.ndarray:
    return dilate(erode(mask, radius), radius)


def closing(mask: np.ndarray, radius: int) -> np.ndarray:
    return erode(dilate(mask, radius), radius)


def clean(mask: BinaryMask, params: DetectorParams) -> BinaryMask:
    """Opening with ``open_radius`` followed by closing with ``close_radius``."""
    pixels = closing(opening(mask.pixels, params.open_radius), params.close_radius)
    return BinaryMask(pixels, mask.frame_index)


def detect(frame: Frame, bg: BackgroundImage, params: DetectorParams | None = None) -> BinaryMask:
    params = params or DetectorParams()
    return clean(subtract(frame, bg, params), params)


def ingest_external(path, frame_index: int | None = None) -> BinaryMask:
    """Read an external mask; only label 255 is foreground.

    Shadow, out-of-ROI and unknown labels are all treated as background so
    uncertain pixels never end up inside harvested objects.
    """
    path = Path(path)
    if frame_index is None:
        digits = "".join(c for c in path.stem if c.isdigit())
        frame_index = int(digits) if digits else 0
    labels = load_label_mask(path)
    return BinaryMask(labels.pixels == FOREGROUND, frame_index)


def mask_path(mask_dir, index: int) -> Path:
    return Path(mask_dir) / frame_name("bin", index)


def save_mask(mask_dir, mask: BinaryMask) -> Path:
    path = mask_path(mask_dir, mask.frame_index)
    write_image(path, mask.pixels)
    return path


def load_masks(mask_dir, indices) -> list[BinaryMask]:
    masks = []
    for i in indices:
        path = mask_path(mask_dir, i)
        if not path.exists():
            raise FileNotFoundError(f"missing mask {path}")
        masks.append(ingest_external(path, i))
    return masks
