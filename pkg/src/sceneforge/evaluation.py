"""Open-vocabulary 3D detection evaluation: greedy matching, AP, mAP.

Detections are pooled across scenes per category, matched greedily in
confidence order against ground truth at an IoU threshold (0.25 by
default), and scored with interpolated average precision. The benchmark
mean is taken over the split's unseen categories that appear in the
ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyInputError, InvalidConfigError
from .geometry import Box3, axis_aligned_hull, iou3d_axis_aligned, iou3d_oriented
from .ingestion import BenchmarkSplit
from .scene import ObjectAnnotation

IOU_MODES = ("aabb", "oriented")
INTERPOLATIONS = ("all", "eleven")


@dataclass(frozen=True)
class Detection:
    scene_id: str
    category: str
    box: Box3
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"detection score must be finite, got {self.score}")


@dataclass(frozen=True)
class EvalReport:
    per_category_ap: Mapping[str, float]
    map_value: float | None
    included_categories: tuple[str, ...]
    num_gt: int
    num_detections: int
    num_matched: int
    iou_threshold: float = 0.25
    iou_mode: str = "aabb"
    interpolation: str = "all"

    def __post_init__(self):
        for cat, ap in self.per_category_ap.items():
            if not 0.0 <= ap <= 1.0:
                raise ValueError(f"AP for {cat!r} outside [0, 1]: {ap}")


def _pair_iou(a: Box3, b: Box3, iou_mode: str) -> float:
    if iou_mode == "aabb":
        return iou3d_axis_aligned(axis_aligned_hull(a), axis_aligned_hull(b))
    if iou_mode == "oriented":
        return iou3d_oriented(a, b)
    raise InvalidConfigError(f"iou_mode must be one of {IOU_MODES}, got {iou_mode!r}")


def match_detections(
    dets: Sequence[Detection],
    gts: Sequence[ObjectAnnotation],
    iou_threshold: float,
    iou_mode: str = "aabb",
) -> np.ndarray:
    """Greedy TP/FP flags aligned to the input detection order.

    Detections are visited in descending score (ties keep input order),
    each matching the unmatched ground truth with the highest IoU at or
    above the threshold. One call covers one category in one scene.
    """
    flags = np.zeros(len(dets), dtype=bool)
    if not dets:
        return flags
    order = np.argsort([-d.score for d in dets], kind="stable")
    taken = [False] * len(gts)
    for det_idx in order:
        det = dets[det_idx]
        best_iou = 0.0
        best_gt = -1
        for gt_idx, gt in enumerate(gts):
            if taken[gt_idx]:
                continue
            iou = _pair_iou(det.box, gt.box, iou_mode)
            if iou >= iou_threshold and iou > best_iou:
                best_iou = iou
                best_gt = gt_idx
        if best_gt >= 0:
            taken[best_gt] = True
            flags[det_idx] = True
    return flags


def average_precision(
    scores: Sequence[float],
    tp_flags: Sequence[bool],
    num_gt: int,
    interpolation: str = "all",
) -> float | None:
    """Interpolated AP from scored TP/FP flags.

    "all" integrates the precision envelope over recall; "eleven" averages
    the envelope at recalls 0, 0.1, ..., 1. Returns None when num_gt is 0
    (the category is then excluded from mAP), 0.0 when there are no
    detections but ground truth exists.
    """
    if interpolation not in INTERPOLATIONS:
        raise InvalidConfigError(
            f"interpolation must be one of {INTERPOLATIONS}, got {interpolation!r}"
        )
    if num_gt < 0:
        raise ValueError("num_gt must be >= 0")
    if num_gt == 0:
        return None
    if len(scores) == 0:
        return 0.0
    order = np.argsort(np.array([-s for s in scores]), kind="stable")
    flags = np.array(tp_flags, dtype=bool)[order]
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    if interpolation == "eleven":
        ap = 0.0
        for r in np.linspace(0.0, 1.0, 11):
            mask = recall >= r - 1e-12
            ap += precision[mask].max() if mask.any() else 0.0
        return float(ap / 11.0)
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def evaluate(
    dets: Sequence[Detection],
    gts: Mapping[str, Sequence[ObjectAnnotation]],
    split: BenchmarkSplit,
    iou_threshold: float = 0.25,
    iou_mode: str = "aabb",
    interpolation: str = "all",
) -> EvalReport:
    """Per-category AP pooled over scenes and mAP over unseen categories.

    gts maps scene_id -> annotations. Categories absent from the ground
    truth are excluded from the mean rather than scored zero.
    """
    num_gt_total = sum(len(v) for v in gts.values())
    if num_gt_total == 0:
        raise EmptyInputError("evaluation requires at least one ground-truth box")

    categories = sorted(
        {a.category for anns in gts.values() for a in anns}
        | {d.category for d in dets}
    )
    per_category_ap: dict[str, float] = {}
    matched_total = 0
    for category in categories:
        scene_ids = sorted(
            {sid for sid, anns in gts.items() if any(a.category == category for a in anns)}
            | {d.scene_id for d in dets if d.category == category}
        )
        scores: list[float] = []
        flags: list[bool] = []
        num_gt = 0
        for sid in scene_ids:
            scene_dets = [d for d in dets if d.scene_id == sid and d.category == category]
            scene_gts = [a for a in gts.get(sid, ()) if a.category == category]
            num_gt += len(scene_gts)
            scene_flags = match_detections(scene_dets, scene_gts, iou_threshold, iou_mode)
            scores.extend(d.score for d in scene_dets)
            flags.extend(bool(f) for f in scene_flags)
        ap = average_precision(scores, flags, num_gt, interpolation)
        matched_total += sum(flags)
        if ap is not None:
            per_category_ap[category] = ap

    included = tuple(c for c in split.unseen if c in per_category_ap)
    map_value = (
        float(np.mean([per_category_ap[c] for c in included])) if included else None
    )
    return EvalReport(
        per_category_ap=per_category_ap,
        map_value=map_value,
        included_categories=included,
        num_gt=num_gt_total,
        num_detections=len(dets),
        num_matched=matched_total,
        iou_threshold=iou_threshold,
        iou_mode=iou_mode,
        interpolation=interpolation,
    )


@dataclass(frozen=True)
class Scannet200Split:
    """Head/common/tail category triple from the 200-category frequency rule."""

    head: tuple[str, ...]
    common: tuple[str, ...]
    tail: tuple[str, ...]

    def to_benchmark_split(self, name: str = "OV-ScanNet200") -> BenchmarkSplit:
        """Head categories are seen; common and tail are unseen."""
        return BenchmarkSplit(name=name, seen=self.head, unseen=self.common + self.tail)


def scannet200_split(
    category_frequencies: Sequence[tuple[str, int]],
) -> Scannet200Split:
    """Sort 200 categories by descending count (ties lexicographic) and cut
    at 66 / 68 / 66."""
    if len(category_frequencies) != 200:
        raise InvalidConfigError(
            f"expected exactly 200 categories, got {len(category_frequencies)}"
        )
    names = [c for c, _ in category_frequencies]
    if len(set(names)) != len(names):
        raise InvalidConfigError("category names must be unique")
    ranked = sorted(category_frequencies, key=lambda item: (-item[1], item[0]))
    ordered = tuple(c for c, _ in ranked)
    return Scannet200Split(
        head=ordered[:66],
        common=ordered[66:134],
        tail=ordered[134:],
    )
