#!/usr/bin/env python3
"""Native-call reference for the wrapper parity suite.

Reads the same batch request JSON the `mono3d api` boundary accepts on
stdin, but evaluates every operation by importing the library and calling
it directly, with local result serializers.  The parity tests compare the
wrapper's answers against this script's answers; any divergence means the
process boundary perturbed a value.
"""

from __future__ import annotations

import json
import sys

import numpy as np

from mono3d import (
    Box2D,
    Box3D,
    Box3DComponents,
    CameraIntrinsics,
    CanonicalSizes,
    EvalConfig,
    GroundTruthBox,
    HeadOutputGrid,
    LevelParams,
    Quaternion,
    ScoredBox3D,
    SparseDepthMap,
    ap_r40,
    confidence_target,
    decode_detections,
    dense_depth_loss,
    depth_metrics,
    disentangled_l3d,
    nms_2d,
)


def det_to_dict(det: ScoredBox3D) -> dict:
    q = det.box.orientation
    return {
        "class": det.class_id,
        "score": det.score,
        "box2d": [det.box2d.x1, det.box2d.y1, det.box2d.x2, det.box2d.y2],
        "center": list(det.box.center),
        "size": list(det.box.size),
        "quaternion": [q.w, q.x, q.y, q.z],
        "camera_id": det.camera_id,
    }


def det_from_dict(d: dict) -> ScoredBox3D:
    return ScoredBox3D(
        box=Box3D(center=tuple(d["center"]), size=tuple(d["size"]), orientation=Quaternion(*d["quaternion"])),
        box2d=Box2D(*d["box2d"]),
        class_id=int(d["class"]),
        score=float(d["score"]),
        camera_id=d.get("camera_id"),
    )


def gt_from_dict(d: dict) -> GroundTruthBox:
    return GroundTruthBox(
        box=Box3D(center=tuple(d["center"]), size=tuple(d["size"]), orientation=Quaternion(*d["quaternion"])),
        box2d=Box2D(*d["box2d"]),
        class_id=int(d["class"]),
        difficulty=d.get("difficulty", "easy"),
    )


def components_from_dict(d: dict) -> Box3DComponents:
    return Box3DComponents(
        orientation=Quaternion(*d["orientation"]),
        projected_center=tuple(d["projected_center"]),
        depth=d["depth"],
        size=tuple(d["size"]),
    )


def intrinsics_from_dict(d: dict) -> CameraIntrinsics:
    return CameraIntrinsics(fx=d["fx"], fy=d["fy"], px=d["px"], py=d["py"])


def ref_decode_detections(args: dict) -> dict:
    grids = [
        HeadOutputGrid(
            stride=float(level["stride"]),
            quat=np.asarray(level["quat"], dtype=float),
            z_center=np.asarray(level["z_center"], dtype=float),
            z_pixel=np.asarray(level["z_pixel"], dtype=float),
            offset=np.asarray(level["offset"], dtype=float),
            size_delta=np.asarray(level["size_delta"], dtype=float),
            conf3d_logit=np.asarray(level["conf3d_logit"], dtype=float),
            class_logits=np.asarray(level["class_logits"], dtype=float),
            box2d_offsets=np.asarray(level["box2d_offsets"], dtype=float),
        )
        for level in args["levels"]
    ]
    dets = decode_detections(
        grids,
        intrinsics_from_dict(args["intrinsics"]),
        LevelParams(
            sigma=tuple(args["params"]["sigma"]),
            mu=tuple(args["params"]["mu"]),
            alpha=tuple(args["params"]["alpha"]),
            c=args["params"]["c"],
        ),
        CanonicalSizes(sizes={int(k): tuple(v) for k, v in args["canonical_sizes"].items()}),
        args["score_floor"],
        camera_id=args.get("camera_id"),
    )
    return {"detections": [det_to_dict(d) for d in dets]}


def ref_disentangled_l3d(args: dict) -> dict:
    gt_box = Box3D(
        center=tuple(args["gt_box"]["center"]),
        size=tuple(args["gt_box"]["size"]),
        orientation=Quaternion(*args["gt_box"]["quaternion"]),
    )
    loss = disentangled_l3d(
        components_from_dict(args["pred"]),
        gt_box,
        components_from_dict(args["gt"]),
        intrinsics_from_dict(args["intrinsics"]),
    )
    return {"replicas": list(loss.replicas()), "total": loss.total}


def ref_dense_depth_loss(args: dict) -> dict:
    return {
        "loss": dense_depth_loss(
            [np.asarray(m, dtype=float) for m in args["pred_maps"]],
            SparseDepthMap(values=np.asarray(args["gt"], dtype=float)),
        )
    }


def ref_confidence_target(args: dict) -> dict:
    return {"p_star": confidence_target(args["l3d_total"], args.get("temperature", 1.0))}


def ref_nms_2d(args: dict) -> dict:
    kept = nms_2d([det_from_dict(d) for d in args["detections"]], args["iou_threshold"])
    return {"detections": [det_to_dict(d) for d in kept]}


def ref_ap_r40(args: dict) -> dict:
    cfg = args.get("config", {})
    config = EvalConfig(
        iou_thresholds={int(k): v for k, v in cfg.get("iou_thresholds", {}).items()},
        default_iou_threshold=cfg.get("default_iou_threshold", 0.5),
        recall_positions=cfg.get("recall_positions", 40),
        match_metric=cfg.get("match_metric", "iou_3d"),
        distance_thresholds=tuple(cfg.get("distance_thresholds", (0.5, 1.0, 2.0, 4.0))),
        tp_distance_threshold=cfg.get("tp_distance_threshold", 2.0),
    )
    dets = {k: [det_from_dict(d) for d in v] for k, v in args["detections"].items()}
    gts = {k: [gt_from_dict(g) for g in v] for k, v in args["ground_truth"].items()}
    return {"ap": ap_r40(dets, gts, args["class_id"], config)}


def ref_depth_metrics(args: dict) -> dict:
    m = depth_metrics(
        np.asarray(args["pred"], dtype=float),
        SparseDepthMap(values=np.asarray(args["gt"], dtype=float)),
        cap=args.get("cap", 80.0),
    )
    return {"abs_rel": m.abs_rel, "rmse": m.rmse, "delta1": m.delta1, "num_valid": m.num_valid}


OPS = {
    "decode_detections": ref_decode_detections,
    "disentangled_l3d": ref_disentangled_l3d,
    "dense_depth_loss": ref_dense_depth_loss,
    "confidence_target": ref_confidence_target,
    "nms_2d": ref_nms_2d,
    "ap_r40": ref_ap_r40,
    "depth_metrics": ref_depth_metrics,
}


def main() -> None:
    request = json.loads(sys.stdin.read())
    requests = request["requests"] if "requests" in request else [request]
    results = [OPS[r["op"]](r.get("args", {})) for r in requests]
    sys.stdout.write(json.dumps({"results": results}, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
