"""Detection evaluation: 40-point interpolated average precision with
IoU or center-distance matching, class-mean AP, and the translation /
scale / orientation true-positive error metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .decode import ScoredBox3D
from .geometry import Box2D, Box3D, iou_3d, iou_bev, yaw_of

DIFFICULTIES = ("easy", "moderate", "hard", "ignored")

# KITTI-convention difficulty bounds (external convention, not derived from
# any dataset shipped here): min 2D height px, max occlusion level, max
# truncation ratio.
DIFFICULTY_TABLE = {
    "easy": (40.0, 0, 0.15),
    "moderate": (25.0, 1, 0.30),
    "hard": (25.0, 2, 0.50),
}

DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_DISTANCE_THRESHOLDS = (0.5, 1.0, 2.0, 4.0)

MATCH_METRICS = ("iou_3d", "iou_bev", "center_distance")


class UndefinedMetricError(ValueError):
    """Raised when a metric has no defined value (e.g. AP with no ground truth)."""


@dataclass(frozen=True)
class EvalConfig:
    """Matching and sampling configuration for AP evaluation.

    `iou_thresholds` maps class id to the matching IoU; classes not listed
    use `default_iou_threshold`.  With `match_metric="center_distance"`,
    matching uses ground-plane center distance and the AP is averaged over
    `distance_thresholds` (meters).
    """

    iou_thresholds: Mapping[int, float] = field(default_factory=dict)
    default_iou_threshold: float = DEFAULT_IOU_THRESHOLD
    recall_positions: int = 40
    match_metric: str = "iou_3d"
    distance_thresholds: tuple[float, ...] = DEFAULT_DISTANCE_THRESHOLDS
    tp_distance_threshold: float = 2.0

    def __post_init__(self):
        if self.match_metric not in MATCH_METRICS:
            raise ValueError(f"match_metric must be one of {MATCH_METRICS}")
        for class_id, thr in self.iou_thresholds.items():
            if not 0.0 < thr <= 1.0:
                raise ValueError(f"IoU threshold for class {class_id} must be in (0, 1]")
        if not 0.0 < self.default_iou_threshold <= 1.0:
            raise ValueError("default IoU threshold must be in (0, 1]")
        if any(t <= 0 for t in self.distance_thresholds):
            raise ValueError("distance thresholds must be positive")
        if self.tp_distance_threshold <= 0:
            raise ValueError("tp_distance_threshold must be positive")
        if self.recall_positions < 1:
            raise ValueError("need at least one recall position")

    def iou_threshold_for(self, class_id: int) -> float:
        return self.iou_thresholds.get(class_id, self.default_iou_threshold)


@dataclass(frozen=True)
class GroundTruthBox:
    box: Box3D
    box2d: Box2D
    class_id: int
    difficulty: str = "easy"

    def __post_init__(self):
        if self.difficulty not in DIFFICULTIES:
            raise ValueError(f"difficulty must be one of {DIFFICULTIES}, got {self.difficulty}")


def assign_difficulty(
    height_px: Optional[float],
    occlusion: Optional[int],
    truncation: Optional[float],
) -> str:
    """KITTI-convention difficulty tier from 2D height, occlusion level
    (0 fully visible .. 2 largely occluded), and truncation ratio.

    Missing metadata yields "ignored".
    """
    if height_px is None or occlusion is None or truncation is None:
        return "ignored"
    for tier in ("easy", "moderate", "hard"):
        min_h, max_occ, max_trunc = DIFFICULTY_TABLE[tier]
        if height_px >= min_h and occlusion <= max_occ and truncation <= max_trunc:
            return tier
    return "ignored"


def _bev_center_distance(a: Box3D, b: Box3D) -> float:
    return math.hypot(a.center[0] - b.center[0], a.center[2] - b.center[2])


def _match_flags(
    dets: Sequence[ScoredBox3D],
    gts: Sequence[GroundTruthBox],
    class_id: int,
    config: EvalConfig,
    threshold: float,
) -> list[tuple[float, bool]]:
    """Greedy per-image matching; returns (score, is_tp) for every counted
    detection of the class.

    Detections are visited in descending score; each takes the
    best-qualifying unmatched valid ground truth.  A detection that fails
    that but qualifies against any ignored-difficulty ground truth is
    dropped from scoring entirely.
    """
    valid = [g for g in gts if g.class_id == class_id and g.difficulty != "ignored"]
    ignored = [g for g in gts if g.class_id == class_id and g.difficulty == "ignored"]
    class_dets = sorted(
        (d for d in dets if d.class_id == class_id), key=lambda d: -d.score
    )
    if config.match_metric == "center_distance":
        def qualifies(det, gt):
            return _bev_center_distance(det.box, gt.box) <= threshold

        def quality(det, gt):  # higher is better
            return -_bev_center_distance(det.box, gt.box)
    else:
        overlap = iou_bev if config.match_metric == "iou_bev" else iou_3d

        def qualifies(det, gt):
            return overlap(det.box, gt.box) >= threshold

        def quality(det, gt):
            return overlap(det.box, gt.box)

    matched = [False] * len(valid)
    flags: list[tuple[float, bool]] = []
    for det in class_dets:
        best, best_quality = -1, -math.inf
        for k, gt in enumerate(valid):
            if matched[k] or not qualifies(det, gt):
                continue
            q = quality(det, gt)
            if q > best_quality:
                best, best_quality = k, q
        if best >= 0:
            matched[best] = True
            flags.append((det.score, True))
        elif any(qualifies(det, g) for g in ignored):
            continue
        else:
            flags.append((det.score, False))
    return flags


def _pr_points(
    flags: Sequence[tuple[float, bool]], num_gt: int
) -> list[tuple[float, float, float]]:
    """(recall, precision, score) at every distinct score threshold."""
    by_score = sorted(flags, key=lambda f: -f[0])
    points = []
    tp = fp = 0
    for i, (score, is_tp) in enumerate(by_score):
        tp += int(is_tp)
        fp += int(not is_tp)
        # Emit only at threshold boundaries so tied scores count together.
        if i + 1 < len(by_score) and by_score[i + 1][0] == score:
            continue
        points.append((tp / num_gt, tp / (tp + fp), score))
    return points


def _ap_from_points(
    points: Sequence[tuple[float, float, float]], recall_positions: int
) -> float:
    total = 0.0
    for i in range(1, recall_positions + 1):
        r = i / recall_positions
        precisions = [p for rec, p, _ in points if rec >= r]
        total += max(precisions) if precisions else 0.0
    return total / recall_positions


def precision_recall(
    dets: Mapping[str, Sequence[ScoredBox3D]],
    gts: Mapping[str, Sequence[GroundTruthBox]],
    class_id: int,
    config: EvalConfig,
    threshold: Optional[float] = None,
) -> list[tuple[float, float, float]]:
    """Pooled (recall, precision, score) curve for one class.

    `threshold` overrides the config's per-class matching threshold; for
    center-distance matching it must be given explicitly.
    """
    if threshold is None:
        if config.match_metric == "center_distance":
            raise ValueError("center-distance matching requires an explicit threshold")
        threshold = config.iou_threshold_for(class_id)
    keys = set(dets) | set(gts)
    flags: list[tuple[float, bool]] = []
    num_gt = 0
    for key in sorted(keys):
        image_gts = list(gts.get(key, ()))
        num_gt += sum(
            1 for g in image_gts if g.class_id == class_id and g.difficulty != "ignored"
        )
        flags.extend(_match_flags(list(dets.get(key, ())), image_gts, class_id, config, threshold))
    if num_gt == 0:
        raise UndefinedMetricError(f"no ground truth of class {class_id}; AP undefined")
    return _pr_points(flags, num_gt)


def ap_r40(
    dets: Mapping[str, Sequence[ScoredBox3D]],
    gts: Mapping[str, Sequence[GroundTruthBox]],
    class_id: int,
    config: EvalConfig,
) -> float:
    """Average precision at `config.recall_positions` interpolated recall
    points, from greedy per-image matching pooled over all images.

    For center-distance matching the AP is the mean over the configured
    distance thresholds.
    """
    if config.match_metric == "center_distance":
        aps = [
            _ap_from_points(
                precision_recall(dets, gts, class_id, config, threshold=t),
                config.recall_positions,
            )
            for t in config.distance_thresholds
        ]
        return float(np.mean(aps))
    points = precision_recall(dets, gts, class_id, config)
    return _ap_from_points(points, config.recall_positions)


def mean_ap(per_class_aps: Mapping[int, Optional[float]]) -> float:
    """Unweighted mean over classes with a defined AP."""
    defined = [ap for ap in per_class_aps.values() if ap is not None]
    if not defined:
        raise UndefinedMetricError("no class has a defined AP")
    return float(np.mean(defined))


@dataclass(frozen=True)
class TruePositiveMetrics:
    """Mean errors over matched pairs; fields are None with no matches."""

    ate: Optional[float]  # meters, ground-plane center distance
    ase: Optional[float]  # 1 - IoU after aligning center and yaw
    aoe: Optional[float]  # radians, |yaw difference| wrapped to [0, pi]
    num_matches: int


def _aligned_iou(size_a, size_b) -> float:
    inter = math.prod(min(a, b) for a, b in zip(size_a, size_b))
    vol_a = math.prod(size_a)
    vol_b = math.prod(size_b)
    return inter / (vol_a + vol_b - inter)


def _wrapped_yaw_diff(a: float, b: float) -> float:
    d = abs(a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def tp_metrics(
    dets: Mapping[str, Sequence[ScoredBox3D]],
    gts: Mapping[str, Sequence[GroundTruthBox]],
    class_id: int,
    distance_threshold: float,
) -> TruePositiveMetrics:
    """Translation, scale, and orientation errors over true positives.

    Matching is greedy by descending score to the nearest unmatched
    ground-truth center (ground-plane distance <= threshold); ignored
    ground truth does not participate.
    """
    if distance_threshold <= 0:
        raise ValueError(f"distance threshold must be positive, got {distance_threshold}")
    ate, ase, aoe = [], [], []
    for key in sorted(set(dets) | set(gts)):
        valid = [
            g
            for g in gts.get(key, ())
            if g.class_id == class_id and g.difficulty != "ignored"
        ]
        matched = [False] * len(valid)
        for det in sorted((d for d in dets.get(key, ()) if d.class_id == class_id),
                          key=lambda d: -d.score):
            best, best_dist = -1, math.inf
            for k, gt in enumerate(valid):
                if matched[k]:
                    continue
                dist = _bev_center_distance(det.box, gt.box)
                if dist <= distance_threshold and dist < best_dist:
                    best, best_dist = k, dist
            if best >= 0:
                matched[best] = True
                gt = valid[best]
                ate.append(best_dist)
                ase.append(1.0 - _aligned_iou(det.box.size, gt.box.size))
                aoe.append(_wrapped_yaw_diff(yaw_of(det.box), yaw_of(gt.box)))
    if not ate:
        return TruePositiveMetrics(ate=None, ase=None, aoe=None, num_matches=0)
    return TruePositiveMetrics(
        ate=float(np.mean(ate)),
        ase=float(np.mean(ase)),
        aoe=float(np.mean(aoe)),
        num_matches=len(ate),
    )
