"""Duplicate suppression: greedy 2D-IoU NMS per image and ground-plane
NMS across synchronized cameras after conversion to a shared global frame.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Sequence

import numpy as np

from .camera import Pose, transform_point
from .decode import ScoredBox3D
from .geometry import Box3D, Quaternion, iou_2d, iou_bev

DEFAULT_NMS_IOU_2D = 0.3


def _check_threshold(iou_threshold: float) -> None:
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"IoU threshold must be in [0, 1], got {iou_threshold}")


def _greedy(dets: Sequence[ScoredBox3D], overlaps, iou_threshold: float) -> list[ScoredBox3D]:
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    kept: list[int] = []
    for i in order:
        if all(overlaps(dets[i], dets[j]) < iou_threshold for j in kept):
            kept.append(i)
    return [dets[i] for i in kept]


def nms_2d(dets: Sequence[ScoredBox3D], iou_threshold: float) -> list[ScoredBox3D]:
    """Greedy suppression on 2D-box IoU, ranked by the fused 3D score.

    Returns the survivors sorted by descending score; score ties keep the
    earlier input.
    """
    _check_threshold(iou_threshold)
    return _greedy(dets, lambda a, b: iou_2d(a.box2d, b.box2d), iou_threshold)


def _to_global(det: ScoredBox3D, pose: Pose, camera_id: int) -> ScoredBox3D:
    center = transform_point(pose, np.asarray(det.box.center))
    rotation = Quaternion(*pose.rotation) * det.box.orientation
    box = Box3D(
        center=tuple(float(c) for c in center),
        size=det.box.size,
        orientation=rotation,
    )
    return replace(det, box=box, camera_id=camera_id)


def nms_bev_global(
    dets_per_camera: Mapping[int, Sequence[ScoredBox3D]],
    poses: Mapping[int, Pose],
    iou_threshold: float,
) -> list[ScoredBox3D]:
    """Cross-camera suppression on ground-plane IoU in the global frame.

    Every box is moved from its camera frame to the global frame using that
    camera's pose, then greedy NMS runs over the pooled set so the same
    object seen by adjacent cameras collapses to its highest-scoring copy.
    Output boxes stay in the global frame.
    """
    _check_threshold(iou_threshold)
    pooled: list[ScoredBox3D] = []
    for camera_id in sorted(dets_per_camera):
        if camera_id not in poses:
            raise ValueError(f"no pose configured for camera {camera_id}")
        pose = poses[camera_id]
        pooled.extend(_to_global(det, pose, camera_id) for det in dets_per_camera[camera_id])
    return _greedy(pooled, lambda a, b: iou_bev(a.box, b.box), iou_threshold)
