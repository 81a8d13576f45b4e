"""Precision / recall / F-measure under CDnet scoring rules.

Pixels outside the ROI and pixels labeled 85 (outside ROI) or 170 (unknown)
are not scored. Label 255 is positive; 0 and 50 (hard shadow) are negative.
Counts are summed over a whole video before computing F.
"""

from __future__ import annotations

import logging
from pathlib import Path
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from scenesynth.errors import DimensionError, SceneSynthError
from scenesynth.frame_store import (
    FOREGROUND,
    OUTSIDE_ROI,
    UNKNOWN,
    LabelMask,
    Roi,
    frame_name,
    load_label_mask,
    load_roi,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("counts must be non-negative")

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(self.tp + other.tp, self.fp + other.fp,
                          self.fn + other.fn, self.tn + other.tn)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    @property
    def f_measure(self) -> float:
        return f_measure(self)


def accumulate(pred, gt: LabelMask | np.ndarray, roi: Roi | np.ndarray | None = None) -> EvalCounts:
    pred = getattr(pred, "pixels", pred).astype(bool)
    labels = gt.pixels if isinstance(gt, LabelMask) else np.asarray(gt)
    if pred.shape != labels.shape:
        raise DimensionError(f"prediction {pred.shape} vs ground truth {labels.shape}")
    scored = (labels != OUTSIDE_ROI) & (labels != UNKNOWN)
    if roi is not None:
        roi_mask = roi.mask if isinstance(roi, Roi) else np.asarray(roi, dtype=bool)
        if roi_mask.shape != labels.shape:
            raise DimensionError(f"ROI {roi_mask.shape} vs ground truth {labels.shape}")
        scored &= roi_mask
    pos = labels == FOREGROUND
    tp = np.count_nonzero(scored & pred & pos)
    fp = np.count_nonzero(scored & pred & ~pos)
    fn = np.count_nonzero(scored & ~pred & pos)
    tn = np.count_nonzero(scored & ~pred & ~pos)
    return EvalCounts(int(tp), int(fp), int(fn), int(tn))


def f_measure(counts: EvalCounts) -> float:
    """2 tp / (2 tp + fp + fn); 1.0 when there was nothing to find and nothing found."""
    denom = 2 * counts.tp + counts.fp + counts.fn
    if denom == 0:
        return 1.0
    return 2 * counts.tp / denom


def total(counts: Iterable[EvalCounts]) -> EvalCounts:
    out = EvalCounts()
    for c in counts:
        out = out + c
    return out


@dataclass
class VideoScore:
    video: str
    category: str
    counts: EvalCounts

    @property
    def f_measure(self) -> float:
        return f_measure(self.counts)


@dataclass
class EvalReport:
    videos: list[VideoScore] = field(default_factory=list)
    categories: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "videos": [
                {
                    "video": v.video,
                    "category": v.category,
                    "precision": v.counts.precision,
                    "recall": v.counts.recall,
                    "f_measure": v.f_measure,
                    "tp": v.counts.tp, "fp": v.counts.fp, "fn": v.counts.fn, "tn": v.counts.tn,
                }
                for v in self.videos
            ],
            "categories": dict(self.categories),
        }

    def table(self) -> str:
        videos = [(v.video, v.category, f"{v.counts.precision:.3f}",
                   f"{v.counts.recall:.3f}", f"{v.f_measure:.3f}") for v in self.videos]
        cats = [(c, f"{f:.3f}") for c, f in self.categories.items()]
        return (_format(("Video", "Category", "Precision", "Recall", "F-measure"), videos)
                + "\n\n" + _format(("Category", "F-measure"), cats))


def _format(header, rows) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    line = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()
    return "\n".join([line(header), "  ".join("-" * w for w in widths), *map(line, rows)])


def report(per_video: Sequence[tuple[str, EvalCounts]], category_of: Mapping[str, str],
           categories: Sequence[str] | None = None) -> EvalReport:
    """Per-video F from summed counts; category score is the plain mean over its videos."""
    rep = EvalReport()
    by_cat: dict[str, list[float]] = {}
    for video, counts in per_video:
        if video not in category_of:
            raise SceneSynthError(f"video {video!r} has no category")
        score = VideoScore(video, category_of[video], counts)
        rep.videos.append(score)
        by_cat.setdefault(score.category, []).append(score.f_measure)
    wanted = list(categories) if categories is not None else list(by_cat)
    for cat in wanted:
        scores = by_cat.get(cat)
        if not scores:
            log.warning("category %r has no videos; omitted from report", cat)
            continue
        rep.categories[cat] = float(np.mean(scores))
    return rep


def _prediction_file(pred_dir: Path, index: int) -> Path:
    for prefix in ("bin", "gt"):
        p = pred_dir / frame_name(prefix, index)
        if p.exists():
            return p
    raise FileNotFoundError(f"no prediction for frame {index} in {pred_dir}")


def evaluate_video(scene_dir, pred_dir) -> EvalCounts:
    """Score ``pred_dir/bin%06d.png`` against a CDnet scene's ground truth.

    Only frames inside the temporal ROI that have a ground-truth file are
    scored. Predictions go through the same label snapping as external masks,
    so a ground-truth directory scores perfectly against itself.
    """
    scene_dir, pred_dir = Path(scene_dir), Path(pred_dir)
    gt_dir = scene_dir / "groundtruth"
    if not gt_dir.is_dir():
        raise FileNotFoundError(f"no groundtruth/ directory in {scene_dir}")
    gt_files = sorted(gt_dir.glob("gt*.png"))
    if not gt_files:
        raise SceneSynthError(f"{gt_dir} has no gt*.png files")
    first_gt = load_label_mask(gt_files[0])
    roi = load_roi(scene_dir, first_gt.pixels.shape)
    counts = EvalCounts()
    for path in gt_files:
        index = int(path.stem[2:])
        if not roi.contains_frame(index):
            continue
        gt = load_label_mask(path)
        pred = load_label_mask(_prediction_file(pred_dir, index)).pixels == FOREGROUND
        counts = counts + accumulate(pred, gt, roi)
    return counts
