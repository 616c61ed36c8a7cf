"""Training losses: target assignment, 2D detection losses, the
disentangled 8-corner 3D loss, the self-supervised confidence target, and
the masked dense depth loss.

The disentangled loss rebuilds a candidate box four times, each time taking
exactly one predicted component (orientation, projected center, depth, size)
and the ground-truth values for the other three, and averages the per-vertex
L1 distances over the 8 corresponding corners.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .camera import CameraIntrinsics, project, unproject
from .geometry import Box2D, Box3D, Quaternion, corners
from .depthmap import SparseDepthMap

DEFAULT_RADIUS_FACTOR = 1.5
DEFAULT_LEVEL_RANGES = ((0.0, 64.0), (64.0, 128.0), (128.0, 256.0), (256.0, 512.0), (512.0, math.inf))

_IOU_FLOOR = 1e-9


@dataclass(frozen=True)
class Box3DComponents:
    """The four decoded pieces a 3D box is regressed as."""

    orientation: Quaternion  # egocentric
    projected_center: tuple[float, float]  # pixels
    depth: float  # meters
    size: tuple[float, float, float]  # (W, H, D) meters

    def __post_init__(self):
        if self.depth <= 0:
            raise ValueError(f"depth must be positive, got {self.depth}")
        if any(s <= 0 for s in self.size):
            raise ValueError(f"size must be positive, got {self.size}")


def box_from_components(components: Box3DComponents, intrinsics: CameraIntrinsics) -> Box3D:
    u, v = components.projected_center
    center = unproject(intrinsics, u, v, components.depth)
    return Box3D(
        center=tuple(float(c) for c in center),
        size=components.size,
        orientation=components.orientation,
    )


def components_from_box(box: Box3D, intrinsics: CameraIntrinsics) -> Box3DComponents:
    u, v, d = project(intrinsics, np.asarray(box.center))
    return Box3DComponents(
        orientation=box.orientation, projected_center=(u, v), depth=d, size=box.size
    )


@dataclass(frozen=True)
class LevelLocations:
    """Feature locations of one pyramid level: (N, 2) pixel (u, v) + stride."""

    points: np.ndarray
    stride: float


def grid_locations(height: int, width: int, stride: float) -> LevelLocations:
    """Cell-center locations of an (height x width) feature grid."""
    v, u = np.mgrid[0:height, 0:width]
    points = np.stack([(u + 0.5) * stride, (v + 0.5) * stride], axis=-1).reshape(-1, 2)
    return LevelLocations(points=points.astype(float), stride=stride)


@dataclass(frozen=True)
class AssignmentResult:
    """Per-location targets, flattened over all levels in order.

    Where `positive` is False, gt_index is -1 and centerness/offsets are 0.
    """

    positive: np.ndarray  # (N,) bool
    gt_index: np.ndarray  # (N,) int
    centerness: np.ndarray  # (N,) float
    offsets: np.ndarray  # (N, 4) float, (l, t, r, b)


def assign_targets(
    locations: Sequence[LevelLocations],
    gt: Sequence[tuple[Box2D, Box3D, int]],
    radius_factor: float = DEFAULT_RADIUS_FACTOR,
    level_ranges: Sequence[tuple[float, float]] = DEFAULT_LEVEL_RANGES,
) -> AssignmentResult:
    """Center-sampled positive assignment over pyramid locations.

    A location is positive for a ground-truth box iff
      1. it lies strictly inside the 2D box (all side offsets > 0),
      2. it lies within radius_factor * stride of the box center along
         both axes (inclusive), and
      3. the largest side offset falls in the location level's range
         (lo, hi].
    A location contested by several boxes goes to the smallest-area one
    (first listed on ties).  Centerness is
    sqrt((min(l,r)/max(l,r)) * (min(t,b)/max(t,b))).
    """
    if len(level_ranges) < len(locations):
        raise ValueError(f"need a range per level: {len(locations)} levels, {len(level_ranges)} ranges")
    total = sum(len(level.points) for level in locations)
    positive = np.zeros(total, dtype=bool)
    gt_index = np.full(total, -1, dtype=int)
    centerness = np.zeros(total, dtype=float)
    offsets = np.zeros((total, 4), dtype=float)
    if not gt:
        return AssignmentResult(positive, gt_index, centerness, offsets)

    areas = np.array([box2d.area() for box2d, _, _ in gt])
    start = 0
    for level, locs in enumerate(locations):
        lo, hi = level_ranges[level]
        radius = radius_factor * locs.stride
        for i, (u, v) in enumerate(locs.points):
            best = -1
            for k, (box2d, _, _) in enumerate(gt):
                l, t = u - box2d.x1, v - box2d.y1
                r, b = box2d.x2 - u, box2d.y2 - v
                if min(l, t, r, b) <= 0:
                    continue
                cx, cy = 0.5 * (box2d.x1 + box2d.x2), 0.5 * (box2d.y1 + box2d.y2)
                if abs(u - cx) > radius or abs(v - cy) > radius:
                    continue
                if not lo < max(l, t, r, b) <= hi:
                    continue
                if best < 0 or areas[k] < areas[best]:
                    best = k
            if best >= 0:
                idx = start + i
                box2d = gt[best][0]
                l, t = u - box2d.x1, v - box2d.y1
                r, b = box2d.x2 - u, box2d.y2 - v
                positive[idx] = True
                gt_index[idx] = best
                offsets[idx] = (l, t, r, b)
                centerness[idx] = math.sqrt(
                    (min(l, r) / max(l, r)) * (min(t, b) / max(t, b))
                )
        start += len(locs.points)
    return AssignmentResult(positive, gt_index, centerness, offsets)


def iou_loss_2d(pred_offsets, gt_offsets) -> float:
    """-ln(IoU) of the boxes rebuilt around the shared location.

    Accepts single (l, t, r, b) offset tuples or (N, 4) arrays; rows are
    averaged.  IoU is clamped to 1e-9 so disjoint predictions stay finite.
    """
    pred = np.atleast_2d(np.asarray(pred_offsets, dtype=float))
    gt = np.atleast_2d(np.asarray(gt_offsets, dtype=float))
    if pred.shape != gt.shape or pred.shape[-1] != 4:
        raise ValueError("offset arrays must both be (N, 4)")
    if np.any(gt.sum(axis=1) <= 0):
        raise ValueError("ground-truth boxes must be nondegenerate")
    area_pred = (pred[:, 0] + pred[:, 2]) * (pred[:, 1] + pred[:, 3])
    area_gt = (gt[:, 0] + gt[:, 2]) * (gt[:, 1] + gt[:, 3])
    iw = np.minimum(pred[:, 0], gt[:, 0]) + np.minimum(pred[:, 2], gt[:, 2])
    ih = np.minimum(pred[:, 1], gt[:, 1]) + np.minimum(pred[:, 3], gt[:, 3])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    union = area_pred + area_gt - inter
    iou = np.clip(inter / union, _IOU_FLOOR, 1.0)
    return float(np.mean(-np.log(iou)))


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    # log(sigmoid(x)) = -softplus(-x), computed stably.
    return -np.logaddexp(0.0, -x)


def focal_loss(
    class_logits,
    target_class,
    alpha: float = 0.25,
    gamma: float = 2.0,
) -> float:
    """One-vs-all binary focal loss summed over classes and locations,
    normalized by the number of positive locations.

    `target_class` holds the class index per location, -1 for background.
    """
    logits = np.atleast_2d(np.asarray(class_logits, dtype=float))
    targets = np.atleast_1d(np.asarray(target_class, dtype=int))
    if logits.shape[0] != targets.shape[0]:
        raise ValueError("one target class per location required")
    n, c = logits.shape
    onehot = np.zeros((n, c))
    pos = targets >= 0
    onehot[np.arange(n)[pos], targets[pos]] = 1.0
    log_p = _log_sigmoid(logits)
    log_q = _log_sigmoid(-logits)
    p = np.exp(log_p)
    per_class = -(
        alpha * onehot * (1.0 - p) ** gamma * log_p
        + (1.0 - alpha) * (1.0 - onehot) * p**gamma * log_q
    )
    num_pos = max(int(np.count_nonzero(pos)), 1)
    return float(per_class.sum() / num_pos)


def centerness_loss(pred_logit, target) -> float:
    """Binary cross entropy between sigmoid(logit) and a soft target,
    averaged over locations."""
    logits = np.asarray(pred_logit, dtype=float)
    targets = np.asarray(target, dtype=float)
    if np.any((targets < 0) | (targets > 1)):
        raise ValueError("centerness targets must lie in [0, 1]")
    bce = -(targets * _log_sigmoid(logits) + (1.0 - targets) * _log_sigmoid(-logits))
    return float(np.mean(bce))


@dataclass(frozen=True)
class DisentangledLoss:
    """The four single-component corner losses and their sum."""

    orientation: float
    projected_center: float
    depth: float
    size: float

    @property
    def total(self) -> float:
        return self.orientation + self.projected_center + self.depth + self.size

    def replicas(self) -> tuple[float, float, float, float]:
        return (self.orientation, self.projected_center, self.depth, self.size)


def _corner_l1(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).sum() / 8.0)


def disentangled_l3d(
    pred: Box3DComponents,
    gt_box: Box3D,
    gt: Box3DComponents,
    intrinsics: CameraIntrinsics,
) -> DisentangledLoss:
    """Corner loss replicated once per predicted component.

    Each replica builds a box from one predicted component and the
    ground-truth values of the other three, then averages the per-vertex
    L1 distances to the ground-truth corners over the 8 vertices.
    `gt` must be the component decomposition of `gt_box`.
    """
    gt_corners = corners(gt_box)
    replicas = []
    for name in ("orientation", "projected_center", "depth", "size"):
        mixed = Box3DComponents(
            orientation=pred.orientation if name == "orientation" else gt.orientation,
            projected_center=(
                pred.projected_center if name == "projected_center" else gt.projected_center
            ),
            depth=pred.depth if name == "depth" else gt.depth,
            size=pred.size if name == "size" else gt.size,
        )
        replicas.append(_corner_l1(corners(box_from_components(mixed, intrinsics)), gt_corners))
    return DisentangledLoss(*replicas)


def confidence_target(l3d_total: float, temperature: float = 1.0) -> float:
    """Self-supervised confidence target exp(-loss / T) in (0, 1]."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if l3d_total < 0:
        raise ValueError(f"loss must be nonnegative, got {l3d_total}")
    return math.exp(-l3d_total / temperature)


def confidence_loss(conf3d_logit: float, p_star: float) -> float:
    """Binary cross entropy between sigmoid(logit) and the confidence target."""
    if not 0.0 < p_star <= 1.0:
        raise ValueError(f"confidence target must be in (0, 1], got {p_star}")
    x = float(conf3d_logit)
    return float(p_star * np.logaddexp(0.0, -x) + (1.0 - p_star) * np.logaddexp(0.0, x))


def dense_depth_loss(pred_maps: Sequence[np.ndarray], gt: SparseDepthMap) -> float:
    """Sum over levels of the mean absolute error at valid (gt > 0) pixels.

    Each map must already be at the ground-truth resolution.  With no valid
    pixels the loss is 0 and a warning is emitted.
    """
    mask = gt.values > 0
    for i, pred in enumerate(pred_maps):
        if pred.shape != gt.values.shape:
            raise ValueError(
                f"level {i} map has shape {pred.shape}, expected {gt.values.shape}"
            )
    if not mask.any():
        warnings.warn("depth loss over a map with no valid pixels; returning 0")
        return 0.0
    gt_valid = gt.values[mask]
    return float(sum(np.abs(gt_valid - pred[mask]).mean() for pred in pred_maps))


def total_loss(l2d_parts, l3d_total: float, l_conf: float) -> float:
    """Total training loss: summed 2D parts + 3D corner loss + confidence.

    `l2d_parts` may be the pre-summed 2D loss or a sequence of its parts.
    """
    l2d = float(np.sum(l2d_parts))
    for name, value in (("l2d", l2d), ("l3d", l3d_total), ("conf", l_conf)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite loss term {name}: {value}")
        if value < 0:
            raise ValueError(f"negative loss term {name}: {value}")
    return l2d + float(l3d_total) + float(l_conf)
