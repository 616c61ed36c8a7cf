"""File formats: intrinsics/extrinsics JSON, detection and ground-truth
JSON, KITTI-style plain-text labels, decoding parameter files, 16-bit PNG
depth maps, and point-cloud CSV.

All JSON is written with sorted keys and two-space indent so identical
inputs produce byte-identical files.  Depth PNGs store
round(depth * 256) as a single 16-bit channel; 0 marks a missing value.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image

from .camera import CameraIntrinsics, Pose
from .decode import CanonicalSizes, HeadOutputGrid, LevelParams, ScoredBox3D
from .evaluation import EvalConfig, GroundTruthBox
from .geometry import Box2D, Box3D, Quaternion, yaw_of

DEPTH_PNG_SCALE = 256.0

KITTI_CLASS_NAMES = {0: "Car", 1: "Pedestrian", 2: "Cyclist"}


def dump_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON in {path}: {exc}") from exc


# -- cameras -----------------------------------------------------------------


def load_intrinsics(path: str | Path) -> CameraIntrinsics:
    data = load_json(path)
    return CameraIntrinsics(fx=data["fx"], fy=data["fy"], px=data["px"], py=data["py"])


def save_intrinsics(intrinsics: CameraIntrinsics, path: str | Path) -> None:
    dump_json(
        {"fx": intrinsics.fx, "fy": intrinsics.fy, "px": intrinsics.px, "py": intrinsics.py},
        path,
    )


def _pose_from_dict(data: Mapping) -> Pose:
    return Pose(rotation=tuple(data["rotation"]), translation=tuple(data["translation"]))


def _pose_to_dict(pose: Pose) -> dict:
    return {"rotation": list(pose.rotation), "translation": list(pose.translation)}


def load_extrinsics(path: str | Path) -> dict[int, Pose]:
    """Per-camera poses: JSON object mapping camera id to
    {"rotation": [w,x,y,z], "translation": [x,y,z]}.

    A file holding a single pose object is read as camera 0.
    """
    data = load_json(path)
    if "rotation" in data:
        return {0: _pose_from_dict(data)}
    return {int(camera_id): _pose_from_dict(entry) for camera_id, entry in data.items()}


def save_extrinsics(poses: Mapping[int, Pose], path: str | Path) -> None:
    dump_json({str(cid): _pose_to_dict(pose) for cid, pose in poses.items()}, path)


# -- detections and ground truth ----------------------------------------------


def _quat_list(q: Quaternion) -> list[float]:
    return [q.w, q.x, q.y, q.z]


def detection_to_dict(det: ScoredBox3D) -> dict:
    return {
        "class": det.class_id,
        "score": det.score,
        "box2d": [det.box2d.x1, det.box2d.y1, det.box2d.x2, det.box2d.y2],
        "center": list(det.box.center),
        "size": list(det.box.size),
        "quaternion": _quat_list(det.box.orientation),
        "camera_id": det.camera_id,
    }


def box3d_from_dict(data: Mapping) -> Box3D:
    return Box3D(
        center=tuple(data["center"]),
        size=tuple(data["size"]),
        orientation=Quaternion(*data["quaternion"]),
    )


def detection_from_dict(entry: Mapping) -> ScoredBox3D:
    return ScoredBox3D(
        box=box3d_from_dict(entry),
        box2d=Box2D(*entry["box2d"]),
        class_id=int(entry["class"]),
        score=float(entry["score"]),
        camera_id=entry.get("camera_id"),
    )


def ground_truth_to_dict(g: GroundTruthBox) -> dict:
    return {
        "class": g.class_id,
        "box2d": [g.box2d.x1, g.box2d.y1, g.box2d.x2, g.box2d.y2],
        "center": list(g.box.center),
        "size": list(g.box.size),
        "quaternion": _quat_list(g.box.orientation),
        "difficulty": g.difficulty,
    }


def ground_truth_from_dict(entry: Mapping) -> GroundTruthBox:
    return GroundTruthBox(
        box=box3d_from_dict(entry),
        box2d=Box2D(*entry["box2d"]),
        class_id=int(entry["class"]),
        difficulty=entry.get("difficulty", "easy"),
    )


def load_detections(path: str | Path) -> list[ScoredBox3D]:
    return [detection_from_dict(entry) for entry in load_json(path)]


def save_detections(dets: Sequence[ScoredBox3D], path: str | Path) -> None:
    dump_json([detection_to_dict(d) for d in dets], path)


def load_ground_truth(path: str | Path) -> list[GroundTruthBox]:
    """Ground-truth JSON: like detections but with a "difficulty" field
    instead of a score (missing difficulty defaults to "easy")."""
    return [ground_truth_from_dict(entry) for entry in load_json(path)]


def save_ground_truth(boxes: Sequence[GroundTruthBox], path: str | Path) -> None:
    dump_json([ground_truth_to_dict(g) for g in boxes], path)


# -- KITTI plain-text labels ---------------------------------------------------
#
# One object per line:
#   type truncated occluded alpha x1 y1 x2 y2 h w l x y z ry [score]
# where (x, y, z) is the bottom-face center, (h, w, l) the vertical /
# lateral / heading extents, and ry the heading angle about the vertical
# axis with ry = 0 along camera +x.  Only the yaw component of the
# orientation survives this format.


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def kitti_label_lines(
    boxes: Sequence[GroundTruthBox],
    class_names: Mapping[int, str] = KITTI_CLASS_NAMES,
) -> list[str]:
    lines = []
    for g in boxes:
        name = class_names.get(g.class_id, f"Class{g.class_id}")
        w, h, d = g.box.size
        cx, cy, cz = g.box.center
        ry = _wrap_angle(yaw_of(g.box) - math.pi / 2.0)
        alpha = _wrap_angle(ry - math.atan2(cx, cz))
        fields = [
            name,
            "0.00",
            "0",
            f"{alpha:.6f}",
            f"{g.box2d.x1:.2f}",
            f"{g.box2d.y1:.2f}",
            f"{g.box2d.x2:.2f}",
            f"{g.box2d.y2:.2f}",
            f"{h:.6f}",
            f"{w:.6f}",
            f"{d:.6f}",
            f"{cx:.6f}",
            f"{cy + h / 2.0:.6f}",
            f"{cz:.6f}",
            f"{ry:.6f}",
        ]
        lines.append(" ".join(fields))
    return lines


def save_kitti_labels(boxes: Sequence[GroundTruthBox], path: str | Path) -> None:
    Path(path).write_text("".join(line + "\n" for line in kitti_label_lines(boxes)))


def load_kitti_labels(
    path: str | Path, class_ids: Mapping[str, int] | None = None
) -> list[GroundTruthBox]:
    """Parse KITTI label lines back into ground-truth boxes (yaw only).

    Lines with unknown class names are skipped.
    """
    if class_ids is None:
        class_ids = {name: cid for cid, name in KITTI_CLASS_NAMES.items()}
    boxes = []
    for line in Path(path).read_text().splitlines():
        fields = line.split()
        if not fields or fields[0] not in class_ids:
            continue
        x1, y1, x2, y2 = (float(f) for f in fields[4:8])
        h, w, d = (float(f) for f in fields[8:11])
        x, y_bottom, z = (float(f) for f in fields[11:14])
        ry = float(fields[14])
        yaw = _wrap_angle(ry + math.pi / 2.0)
        boxes.append(
            GroundTruthBox(
                box=Box3D(
                    center=(x, y_bottom - h / 2.0, z),
                    size=(w, h, d),
                    orientation=Quaternion.from_axis_angle([0.0, 1.0, 0.0], yaw),
                ),
                box2d=Box2D(x1, y1, x2, y2),
                class_id=class_ids[fields[0]],
            )
        )
    return boxes


# -- decoding parameters --------------------------------------------------------


def load_level_params(path: str | Path) -> LevelParams:
    data = load_json(path)
    return LevelParams(
        sigma=tuple(data["sigma"]),
        mu=tuple(data["mu"]),
        alpha=tuple(data["alpha"]),
        c=data["c"],
    )


def save_level_params(params: LevelParams, path: str | Path) -> None:
    dump_json(
        {
            "sigma": list(params.sigma),
            "mu": list(params.mu),
            "alpha": list(params.alpha),
            "c": params.c,
        },
        path,
    )


def load_canonical_sizes(path: str | Path) -> CanonicalSizes:
    data = load_json(path)
    return CanonicalSizes(sizes={int(cid): tuple(whd) for cid, whd in data.items()})


def save_canonical_sizes(canon: CanonicalSizes, path: str | Path) -> None:
    dump_json({str(cid): list(whd) for cid, whd in canon.sizes.items()}, path)


def grid_to_dict(grid: HeadOutputGrid) -> dict:
    return {
        "stride": grid.stride,
        "quat": grid.quat.tolist(),
        "z_center": grid.z_center.tolist(),
        "z_pixel": grid.z_pixel.tolist(),
        "offset": grid.offset.tolist(),
        "size_delta": grid.size_delta.tolist(),
        "conf3d_logit": grid.conf3d_logit.tolist(),
        "class_logits": grid.class_logits.tolist(),
        "box2d_offsets": grid.box2d_offsets.tolist(),
    }


def grid_from_dict(data: Mapping) -> HeadOutputGrid:
    return HeadOutputGrid(
        stride=float(data["stride"]),
        quat=np.asarray(data["quat"], dtype=float),
        z_center=np.asarray(data["z_center"], dtype=float),
        z_pixel=np.asarray(data["z_pixel"], dtype=float),
        offset=np.asarray(data["offset"], dtype=float),
        size_delta=np.asarray(data["size_delta"], dtype=float),
        conf3d_logit=np.asarray(data["conf3d_logit"], dtype=float),
        class_logits=np.asarray(data["class_logits"], dtype=float),
        box2d_offsets=np.asarray(data["box2d_offsets"], dtype=float),
    )


def load_head_outputs(path: str | Path) -> list[HeadOutputGrid]:
    data = load_json(path)
    return [grid_from_dict(level) for level in data["levels"]]


def save_head_outputs(grids: Sequence[HeadOutputGrid], path: str | Path) -> None:
    dump_json({"levels": [grid_to_dict(g) for g in grids]}, path)


def eval_config_from_dict(data: Mapping) -> EvalConfig:
    return EvalConfig(
        iou_thresholds={int(k): v for k, v in data.get("iou_thresholds", {}).items()},
        default_iou_threshold=data.get("default_iou_threshold", 0.5),
        recall_positions=data.get("recall_positions", 40),
        match_metric=data.get("match_metric", "iou_3d"),
        distance_thresholds=tuple(data.get("distance_thresholds", (0.5, 1.0, 2.0, 4.0))),
        tp_distance_threshold=data.get("tp_distance_threshold", 2.0),
    )


def load_eval_config(path: str | Path) -> EvalConfig:
    return eval_config_from_dict(load_json(path))


# -- depth maps and point clouds -------------------------------------------------


def save_depth_png(values: np.ndarray, path: str | Path) -> None:
    """Write a depth grid as 16-bit PNG with depth = pixel / 256 meters."""
    scaled = np.round(np.asarray(values, dtype=float) * DEPTH_PNG_SCALE)
    if np.any(scaled < 0) or np.any(scaled > np.iinfo(np.uint16).max):
        raise ValueError("depth out of range for 16-bit PNG encoding")
    Image.fromarray(scaled.astype(np.uint16)).save(Path(path), format="PNG")


def load_depth_png(path: str | Path) -> np.ndarray:
    img = Image.open(Path(path))
    arr = np.asarray(img)
    if arr.dtype not in (np.uint16, np.int32, np.uint8):
        raise ValueError(f"unsupported depth PNG pixel type {arr.dtype}")
    return arr.astype(float) / DEPTH_PNG_SCALE


def save_pointcloud_csv(points: np.ndarray, path: str | Path) -> None:
    """One "x,y,z" line per point, full float precision, no header."""
    lines = [f"{float(p[0])!r},{float(p[1])!r},{float(p[2])!r}" for p in points]
    Path(path).write_text("".join(line + "\n" for line in lines))
