"""Reading and writing CDnet-layout scenes and generated datasets.

A scene directory looks like::

    scene/
      input/in000001.jpg ...
      groundtruth/gt000001.png ...
      ROI.bmp
      temporalROI.txt

Color rasters are kept in RGB order as ``uint8`` arrays of shape (H, W, 3).
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from scenesynth.errors import DimensionError, SceneSynthError

log = logging.getLogger(__name__)

LABELS = (0, 50, 85, 170, 255)
BACKGROUND, SHADOW, OUTSIDE_ROI, UNKNOWN, FOREGROUND = LABELS

_FRAME_RE = re.compile(r"^in(\d+)\.(jpg|jpeg|png|bmp)$", re.IGNORECASE)


@dataclass(eq=False)
class Frame:
    index: int
    pixels: np.ndarray

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]


@dataclass(eq=False)
class LabelMask:
    """CDnet ground truth, every pixel one of ``LABELS``.

    ``snapped`` counts pixels that had to be moved to the nearest legal label
    when the mask was loaded.
    """

    pixels: np.ndarray
    snapped: int = 0

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(eq=False)
class Roi:
    mask: np.ndarray
    temporal_range: tuple[int, int]

    def __post_init__(self):
        first, last = self.temporal_range
        if first > last:
            raise ValueError(f"temporal range {first}..{last} is empty")

    def contains_frame(self, index: int) -> bool:
        return self.temporal_range[0] <= index <= self.temporal_range[1]


def _snap_table() -> np.ndarray:
    values = np.arange(256)
    labels = np.array(LABELS)
    dist = np.abs(values[:, None] - labels[None, :])
    # argmin picks the first minimum; search from the top so ties go upward
    upward = len(LABELS) - 1 - np.argmin(dist[:, ::-1], axis=1)
    return labels[upward].astype(np.uint8)


_SNAP = _snap_table()


def snap_labels(pixels: np.ndarray) -> tuple[np.ndarray, int]:
    """Map each value to the nearest CDnet label; returns (labels, n_changed)."""
    snapped = _SNAP[pixels]
    return snapped, int(np.count_nonzero(snapped != pixels))


def read_image(path, color: bool = True) -> np.ndarray:
    path = os.fspath(path)
    img = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if img is None:
        raise OSError(f"cannot read image {path}")
    if img.dtype != np.uint8:
        raise SceneSynthError(f"{path}: expected 8-bit image, got {img.dtype}")
    if not color:
        if img.ndim != 2:
            raise SceneSynthError(f"{path}: expected single-channel image, got {img.shape[2]} channels")
        return img
    if img.ndim == 2:
        return np.repeat(img[:, :, None], 3, axis=2)
    if img.shape[2] == 4:
        img = img[:, :, :3]
    return np.ascontiguousarray(img[:, :, ::-1])


def write_image(path, pixels: np.ndarray) -> None:
    path = os.fspath(path)
    if pixels.dtype == bool:
        pixels = pixels.astype(np.uint8) * 255
    if pixels.ndim == 3:
        pixels = np.ascontiguousarray(pixels[:, :, ::-1])
    if not cv2.imwrite(path, pixels):
        raise OSError(f"cannot write image {path}")


def list_frame_files(input_dir) -> dict[int, Path]:
    input_dir = Path(input_dir)
    files: dict[int, Path] = {}
    for name in sorted(os.listdir(input_dir)):
        m = _FRAME_RE.match(name)
        if not m:
            continue
        idx = int(m.group(1))
        if idx in files:
            raise SceneSynthError(f"frame {idx} present twice in {input_dir}")
        files[idx] = input_dir / name
    return files


def load_sequence(scene_dir, frame_range: tuple[int, int] | None = None) -> list[Frame]:
    """Load ``scene_dir/input/in%06d.*`` as frames sorted by index.

    With ``frame_range`` only indices in ``[first, last]`` are loaded, and all
    of them must exist.
    """
    input_dir = Path(scene_dir) / "input"
    if not input_dir.is_dir():
        raise FileNotFoundError(f"no input/ directory in {scene_dir}")
    files = list_frame_files(input_dir)
    indices = sorted(files)
    if frame_range is not None:
        first, last = frame_range
        if first > last:
            raise ValueError(f"empty frame range {first}..{last}")
        indices = [i for i in indices if first <= i <= last]
        expected = list(range(first, last + 1))
    else:
        expected = list(range(indices[0], indices[-1] + 1)) if indices else []
    if indices != expected:
        missing = sorted(set(expected) - set(indices))
        raise SceneSynthError(f"{input_dir}: non-contiguous frames, missing {missing[:5]}")

    frames = []
    for i in indices:
        frame = Frame(i, read_image(files[i]))
        if frames and frame.shape != frames[0].shape:
            raise DimensionError(
                f"frame {i} is {frame.width}x{frame.height}, "
                f"expected {frames[0].width}x{frames[0].height}"
            )
        frames.append(frame)
    return frames


def load_label_mask(path) -> LabelMask:
    raw = read_image(path, color=False)
    pixels, n = snap_labels(raw)
    if n:
        log.warning("%s: snapped %d pixels to legal labels", path, n)
    return LabelMask(pixels, snapped=n)


def save_label_mask(path, mask: LabelMask) -> None:
    write_image(path, mask.pixels)


def load_roi(scene_dir, shape: tuple[int, int] | None = None) -> Roi:
    """Read ``ROI.bmp`` and ``temporalROI.txt``; missing files mean "everything"."""
    scene_dir = Path(scene_dir)
    roi_file = scene_dir / "ROI.bmp"
    if roi_file.exists():
        img = cv2.imread(str(roi_file), cv2.IMREAD_GRAYSCALE)
        if img is None:
            raise OSError(f"cannot read {roi_file}")
        mask = img > 0
        if shape is not None and mask.shape != tuple(shape):
            raise DimensionError(f"ROI is {mask.shape}, sequence is {tuple(shape)}")
    elif shape is not None:
        mask = np.ones(shape, dtype=bool)
    else:
        raise FileNotFoundError(f"{roi_file} missing and no frame shape given")

    trange_file = scene_dir / "temporalROI.txt"
    if trange_file.exists():
        first, last = (int(v) for v in trange_file.read_text().split()[:2])
    else:
        indices = list_frame_files(scene_dir / "input") if (scene_dir / "input").is_dir() else {}
        first, last = (min(indices), max(indices)) if indices else (1, 10**9)
    return Roi(mask, (first, last))


def save_roi(scene_dir, roi: Roi) -> None:
    scene_dir = Path(scene_dir)
    write_image(scene_dir / "ROI.bmp", roi.mask.astype(np.uint8) * 255)
    (scene_dir / "temporalROI.txt").write_text("%d %d\n" % roi.temporal_range)


def frame_name(prefix: str, index: int, ext: str = "png") -> str:
    return f"{prefix}{index:06d}.{ext}"


def write_sample(synth_dir, index: int, image: np.ndarray, gt: np.ndarray) -> tuple[str, str]:
    """Write ``img%06d.png`` and ``gt%06d.png`` (0/255); returns the file names."""
    synth_dir = Path(synth_dir)
    img_name, gt_name = frame_name("img", index), frame_name("gt", index)
    write_image(synth_dir / img_name, image)
    write_image(synth_dir / gt_name, gt.astype(np.uint8) * FOREGROUND)
    return img_name, gt_name


def write_json(path, data) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def read_json(path):
    return json.loads(Path(path).read_text())
