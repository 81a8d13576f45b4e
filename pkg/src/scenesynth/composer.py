"""Cut-and-paste synthesis of annotated frames from an object bank."""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from scenesynth.background_model import BackgroundImage
from scenesynth.errors import DimensionError, SceneSynthError
from scenesynth.frame_store import write_json, write_sample
from scenesynth.object_bank import ForegroundObject, ObjectBank
from scenesynth.poisson_blend import BlendMethod, SolverParams, blend

log = logging.getLogger(__name__)

# dataset sizes evaluated per scene: 25f ... 1000f
SCHEDULE = (25, 50, 100, 200, 500, 1000)
MANIFEST = "manifest.json"


class Placement(str, enum.Enum):
    ORIGINAL = "original"
    RANDOM = "random"
    CROSS = "cross"


@dataclass(frozen=True)
class SynthSpec:
    n_samples: int = 200
    max_objects_per_sample: int = 10
    placement: Placement = Placement.ORIGINAL
    blend_method: BlendMethod = BlendMethod.POISSON
    seed: int = 0
    max_resample_attempts: int = 10
    allow_overlap: bool = False
    allow_empty: bool = False
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        object.__setattr__(self, "placement", Placement(self.placement))
        object.__setattr__(self, "blend_method", BlendMethod(self.blend_method))
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.max_objects_per_sample < 1:
            raise ValueError(f"max_objects_per_sample must be >= 1, got {self.max_objects_per_sample}")
        if self.max_resample_attempts < 0:
            raise ValueError("max_resample_attempts must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["placement"] = self.placement.value
        d["blend_method"] = self.blend_method.value
        return d


@dataclass(frozen=True)
class PlacedObject:
    object_id: str
    scene_id: str
    origin: tuple[int, int]
    bank_origin: tuple[int, int]
    blend_method: str
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "scene_id": self.scene_id,
            "origin": list(self.origin),
            "bank_origin": list(self.bank_origin),
            "blend_method": self.blend_method,
            "fallback": self.fallback,
        }


@dataclass(eq=False)
class SyntheticSample:
    sample_index: int
    image: np.ndarray
    gt: np.ndarray
    provenance: list[PlacedObject]
    requested: int = 0

    @property
    def empty(self) -> bool:
        return not self.provenance


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Independent stream per sample, so generation order does not matter."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sample_index,)))


def place(obj: ForegroundObject, mode: Placement | str, rng: np.random.Generator,
          frame_dims: tuple[int, int]) -> tuple[int, int]:
    """Top-left corner for ``obj`` in a ``frame_dims`` (W, H) scene."""
    mode = Placement(mode)
    W, H = frame_dims
    if mode is Placement.ORIGINAL:
        x, y = obj.origin
        if x + obj.width > W or y + obj.height > H:
            raise DimensionError(f"object {obj.id} at {obj.origin} does not fit a {W}x{H} scene")
        return (int(x), int(y))
    if obj.width > W or obj.height > H:
        raise DimensionError(f"object {obj.id} ({obj.width}x{obj.height}) is larger than the {W}x{H} frame")
    x = int(rng.integers(0, W - obj.width + 1))
    y = int(rng.integers(0, H - obj.height + 1))
    return (x, y)


def _pool(banks: ObjectBank | Sequence[ObjectBank]) -> list[tuple[str, ForegroundObject]]:
    if isinstance(banks, ObjectBank):
        banks = [banks]
    return [(b.scene_id, obj) for b in banks for obj in b.objects]


def synthesize(bank: ObjectBank | Sequence[ObjectBank], bg: BackgroundImage, spec: SynthSpec,
               sample_index: int) -> SyntheticSample:
    """Compose one annotated sample.

    For cross-scene placement ``bank`` is the foreign bank (or banks) to draw
    from. The result depends only on the inputs and ``(spec.seed, sample_index)``.
    """
    pool = _pool(bank)
    W, H = bg.width, bg.height
    if spec.placement is Placement.ORIGINAL:
        banks = [bank] if isinstance(bank, ObjectBank) else bank
        for b in banks:
            if b.objects and tuple(b.frame_dims) != (W, H):
                raise DimensionError(f"bank {b.scene_id} is {tuple(b.frame_dims)}, background is {(W, H)}")
    if not pool and not spec.allow_empty:
        raise SceneSynthError("object bank is empty")

    rng = sample_rng(spec.seed, sample_index)
    image = bg.pixels.copy()
    gt = np.zeros((H, W), dtype=bool)
    provenance: list[PlacedObject] = []
    k = int(rng.integers(1, spec.max_objects_per_sample + 1))
    k = min(k, len(pool))
    order = list(rng.permutation(len(pool)))

    for _ in range(k):
        for _attempt in range(spec.max_resample_attempts + 1):
            if not order:
                break
            scene_id, obj = pool[order.pop()]
            x, y = place(obj, spec.placement, rng, (W, H))
            region = gt[y:y + obj.height, x:x + obj.width]
            if not spec.allow_overlap and np.any(region & obj.mask):
                continue
            image, fell_back = blend(image, obj.patch, obj.mask, (x, y),
                                     spec.blend_method, spec.solver)
            region |= obj.mask
            provenance.append(PlacedObject(obj.id, scene_id, (x, y), tuple(obj.origin),
                                           spec.blend_method.value, fell_back))
            break
    if not provenance:
        log.warning("sample %d: no object could be placed", sample_index)
    return SyntheticSample(sample_index, image, gt, provenance, requested=k)


@dataclass
class DatasetManifest:
    spec: dict
    samples: list[dict]
    background_window: tuple[int, int]
    scene_ids: list[str]
    config: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "spec": self.spec,
            "n_samples": len(self.samples),
            "samples": self.samples,
            "background_window": list(self.background_window),
            "scene_ids": self.scene_ids,
        }
        if self.config is not None:
            d["config"] = self.config
        return d


def build_dataset(bank: ObjectBank | Sequence[ObjectBank], bg: BackgroundImage, spec: SynthSpec,
                  out_dir, config: dict | None = None) -> DatasetManifest:
    """Write ``n_samples`` image/gt pairs to ``out_dir`` and the manifest last."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # the manifest goes first so a half-rewritten directory never looks complete
    for stale in [out_dir / MANIFEST, *out_dir.glob("img[0-9]*.png"), *out_dir.glob("gt[0-9]*.png")]:
        stale.unlink(missing_ok=True)
    banks = [bank] if isinstance(bank, ObjectBank) else list(bank)
    samples = []
    try:
        for i in range(spec.n_samples):
            sample = synthesize(banks, bg, spec, i)
            img_name, gt_name = write_sample(out_dir, i + 1, sample.image, sample.gt)
            samples.append({
                "index": i + 1,
                "image": img_name,
                "gt": gt_name,
                "rng": [spec.seed, i],
                "requested_objects": sample.requested,
                "empty": sample.empty,
                "objects": [p.to_dict() for p in sample.provenance],
            })
    except OSError:
        log.error("dataset in %s is incomplete: %d of %d samples written, no manifest",
                  out_dir, len(samples), spec.n_samples)
        raise
    manifest = DatasetManifest(spec.to_dict(), samples, tuple(bg.source_window),
                               [b.scene_id for b in banks], config)
    write_json(out_dir / MANIFEST, manifest.to_dict())
    return manifest
