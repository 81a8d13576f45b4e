"""Object database: connected foreground blobs cut out of video frames."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import cv2
import numpy as np

from scenesynth.change_detect import BinaryMask
from scenesynth.errors import DimensionError, SceneSynthError
from scenesynth.frame_store import Frame, read_image, read_json, write_image, write_json

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


@dataclass(eq=False)
class ForegroundObject:
    id: str
    patch: np.ndarray
    mask: np.ndarray
    origin: tuple[int, int]
    source_frame: int

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ForegroundObject):
            return NotImplemented
        return (
            self.id == other.id
            and tuple(self.origin) == tuple(other.origin)
            and self.source_frame == other.source_frame
            and np.array_equal(self.patch, other.patch)
            and np.array_equal(self.mask, other.mask)
        )


@dataclass(frozen=True)
class ObjectFilter:
    min_area: int = 50
    max_area_fraction: float = 0.5
    reject_border_touching: bool = True

    def __post_init__(self):
        if self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")
        if not 0 < self.max_area_fraction <= 1:
            raise ValueError(f"max_area_fraction must be in (0, 1], got {self.max_area_fraction}")

    def accepts(self, area: int, bbox: tuple[int, int, int, int], frame_dims: tuple[int, int]) -> bool:
        x, y, w, h = bbox
        width, height = frame_dims
        if area < self.min_area or area > self.max_area_fraction * width * height:
            return False
        if self.reject_border_touching:
            if x == 0 or y == 0 or x + w == width or y + h == height:
                return False
        return True


@dataclass(eq=False)
class ObjectBank:
    scene_id: str
    frame_dims: tuple[int, int]
    objects: list[ForegroundObject] = field(default_factory=list)

    def __len__(self):
        return len(self.objects)

    def __iter__(self):
        return iter(self.objects)

    def __eq__(self, other):
        if not isinstance(other, ObjectBank):
            return NotImplemented
        return (
            self.scene_id == other.scene_id
            and tuple(self.frame_dims) == tuple(other.frame_dims)
            and self.objects == other.objects
        )

    def get(self, object_id: str) -> ForegroundObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


def components(mask: np.ndarray):
    """8-connected components of a boolean mask in raster order of their seed.

    Yields ``(component_mask, (x, y, w, h))`` with the mask cropped to the
    component's tight bounding box.
    """
    n, labels, stats, _ = cv2.connectedComponentsWithStats(
        mask.astype(np.uint8), connectivity=8, ltype=cv2.CV_32S)
    if n <= 1:
        return
    flat = labels.ravel()
    uniq, first = np.unique(flat, return_index=True)
    order = [lab for _, lab in sorted(zip(first, uniq)) if lab != 0]
    for lab in order:
        x, y, w, h = (int(v) for v in stats[lab, :4])
        yield labels[y:y + h, x:x + w] == lab, (x, y, w, h)


def extract_objects(frame: Frame, mask: BinaryMask, filt: ObjectFilter | None = None) -> list[ForegroundObject]:
    filt = filt or ObjectFilter()
    if mask.pixels.shape != frame.shape:
        raise DimensionError(f"mask {mask.pixels.shape} does not match frame {frame.shape}")
    dims = (frame.width, frame.height)
    objects = []
    for comp, bbox in components(mask.pixels):
        area = int(np.count_nonzero(comp))
        if not filt.accepts(area, bbox, dims):
            continue
        x, y, w, h = bbox
        objects.append(ForegroundObject(
            id=f"f{frame.index}_{len(objects)}",
            patch=frame.pixels[y:y + h, x:x + w].copy(),
            mask=comp,
            origin=(x, y),
            source_frame=frame.index,
        ))
    return objects


def build_bank(frames: Sequence[Frame], masks: Sequence[BinaryMask],
               filt: ObjectFilter | None = None, scene_id: str = "scene") -> ObjectBank:
    if len(frames) != len(masks):
        raise SceneSynthError(f"{len(frames)} frames but {len(masks)} masks")
    dims = (frames[0].width, frames[0].height) if frames else (0, 0)
    bank = ObjectBank(scene_id, dims)
    for frame, mask in zip(frames, masks):
        if frame.index != mask.frame_index:
            raise SceneSynthError(f"frame {frame.index} paired with mask for frame {mask.frame_index}")
        if (frame.width, frame.height) != dims:
            raise DimensionError(f"frame {frame.index} is {frame.width}x{frame.height}, bank is {dims}")
        bank.objects.extend(extract_objects(frame, mask, filt))
    log.info("bank %s: %d objects from %d frames", scene_id, len(bank), len(frames))
    return bank


def save_bank(bank: ObjectBank, bank_dir) -> None:
    bank_dir = Path(bank_dir)
    bank_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for obj in bank.objects:
        write_image(bank_dir / f"{obj.id}_rgb.png", obj.patch)
        write_image(bank_dir / f"{obj.id}_mask.png", obj.mask)
        entries.append({
            "id": obj.id,
            "origin": list(obj.origin),
            "source_frame": obj.source_frame,
            "area": obj.area,
            "size": [obj.width, obj.height],
        })
    write_json(bank_dir / MANIFEST, {
        "scene_id": bank.scene_id,
        "frame_dims": list(bank.frame_dims),
        "objects": entries,
    })


def load_bank(bank_dir) -> ObjectBank:
    bank_dir = Path(bank_dir)
    manifest_path = bank_dir / MANIFEST
    if not manifest_path.exists():
        raise FileNotFoundError(f"no bank manifest at {manifest_path}")
    meta = read_json(manifest_path)
    bank = ObjectBank(meta["scene_id"], tuple(meta["frame_dims"]))
    seen = set()
    for entry in meta["objects"]:
        oid = entry["id"]
        if oid in seen:
            raise SceneSynthError(f"duplicate object id {oid} in {manifest_path}")
        seen.add(oid)
        rgb_path, mask_path = bank_dir / f"{oid}_rgb.png", bank_dir / f"{oid}_mask.png"
        for p in (rgb_path, mask_path):
            if not p.exists():
                raise SceneSynthError(f"object {oid}: missing crop file {p.name}")
        patch = read_image(rgb_path)
        mask = read_image(mask_path, color=False) > 0
        w, h = entry["size"]
        if patch.shape[:2] != (h, w) or mask.shape != (h, w):
            raise SceneSynthError(
                f"object {oid}: manifest size {w}x{h} but crops are "
                f"{patch.shape[1]}x{patch.shape[0]} / {mask.shape[1]}x{mask.shape[0]}")
        obj = ForegroundObject(oid, patch, mask, tuple(entry["origin"]), entry["source_frame"])
        if obj.area != entry["area"]:
            raise SceneSynthError(f"object {oid}: manifest area {entry['area']} but mask has {obj.area}")
        bank.objects.append(obj)
    return bank
