"""Batch command-line front end.

Exit codes: 0 on success, 1 for metric-level failures (undefined AP, empty
depth mask), 2 for input or usage errors.  All outputs are deterministic
functions of the inputs and flags.  Console summaries print 6 significant
digits; JSON files keep full precision.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .camera import CameraIntrinsics
from .decode import CanonicalSizes, LevelParams, decode_detections
from .depthmap import (
    EmptyMaskError,
    SparseDepthMap,
    depth_metrics,
    lift_to_pointcloud,
    resize_preserving,
)
from .evaluation import UndefinedMetricError, ap_r40, mean_ap, precision_recall, tp_metrics
from .losses import (
    Box3DComponents,
    confidence_target,
    dense_depth_loss,
    disentangled_l3d,
)
from .nms import nms_2d, nms_bev_global
from .synth import NoiseProfile, generate_dataset

log = logging.getLogger("mono3d")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _cmd_decode(args) -> int:
    grids = fileio.load_head_outputs(args.head_outputs)
    intrinsics = fileio.load_intrinsics(args.intrinsics)
    params = fileio.load_level_params(args.params)
    canon = fileio.load_canonical_sizes(args.canonical_sizes)
    dets = decode_detections(
        grids, intrinsics, params, canon, args.score_floor, camera_id=args.camera_id
    )
    fileio.save_detections(dets, args.output)
    print(f"decoded {len(dets)} detections -> {args.output}")
    return 0


def _cmd_nms(args) -> int:
    dets = fileio.load_detections(args.detections)
    if args.mode == "2d":
        kept = nms_2d(dets, args.threshold)
    else:
        if args.extrinsics is None:
            raise ValueError("bev mode requires --extrinsics")
        poses = fileio.load_extrinsics(args.extrinsics)
        per_camera: dict[int, list] = {}
        for det in dets:
            if det.camera_id is None:
                raise ValueError("bev mode requires a camera_id on every detection")
            per_camera.setdefault(det.camera_id, []).append(det)
        kept = nms_bev_global(per_camera, poses, args.threshold)
    fileio.save_detections(kept, args.output)
    print(f"kept {len(kept)}/{len(dets)} detections -> {args.output}")
    return 0


def _paired_stems(det_dir: Path, gt_dir: Path, suffix: str) -> list[str]:
    stems = sorted(p.stem for p in gt_dir.glob(f"*{suffix}"))
    if not stems:
        raise ValueError(f"no {suffix} files found in {gt_dir}")
    return stems


def _cmd_eval(args) -> int:
    det_dir, gt_dir = Path(args.detections), Path(args.ground_truth)
    config = fileio.load_eval_config(args.config)
    dets, gts = {}, {}
    for stem in _paired_stems(det_dir, gt_dir, ".json"):
        gts[stem] = fileio.load_ground_truth(gt_dir / f"{stem}.json")
        det_path = det_dir / f"{stem}.json"
        dets[stem] = fileio.load_detections(det_path) if det_path.exists() else []
    classes = sorted({g.class_id for boxes in gts.values() for g in boxes})
    per_class_ap: dict[int, float | None] = {}
    per_class_tp = {}
    for class_id in classes:
        try:
            per_class_ap[class_id] = ap_r40(dets, gts, class_id, config)
        except UndefinedMetricError:
            per_class_ap[class_id] = None
        tp = tp_metrics(dets, gts, class_id, config.tp_distance_threshold)
        per_class_tp[class_id] = {
            "ate": tp.ate,
            "ase": tp.ase,
            "aoe": tp.aoe,
            "num_matches": tp.num_matches,
        }
    result = {
        "per_class_ap": {str(c): ap for c, ap in per_class_ap.items()},
        "mean_ap": mean_ap(per_class_ap),
        "tp_metrics": {str(c): m for c, m in per_class_tp.items()},
    }
    fileio.dump_json(result, args.output)
    if args.pr_dir is not None:
        pr_dir = Path(args.pr_dir)
        pr_dir.mkdir(parents=True, exist_ok=True)
        for class_id in classes:
            if per_class_ap[class_id] is None or config.match_metric == "center_distance":
                continue
            points = precision_recall(dets, gts, class_id, config)
            lines = ["recall,precision,score"]
            lines += [f"{r!r},{p!r},{s!r}" for r, p, s in points]
            (pr_dir / f"pr_class_{class_id}.csv").write_text(
                "".join(line + "\n" for line in lines)
            )
    for class_id in classes:
        ap = per_class_ap[class_id]
        print(f"class {class_id}: AP = {_fmt(ap) if ap is not None else 'undefined'}")
    print(f"mAP = {_fmt(result['mean_ap'])}")
    return 0


def _cmd_depth_metrics(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.ground_truth)
    per_image = {}
    for stem in _paired_stems(pred_dir, gt_dir, ".png"):
        pred = fileio.load_depth_png(pred_dir / f"{stem}.png")
        gt = SparseDepthMap(values=fileio.load_depth_png(gt_dir / f"{stem}.png"))
        m = depth_metrics(pred, gt, cap=args.cap)
        per_image[stem] = {
            "abs_rel": m.abs_rel,
            "rmse": m.rmse,
            "delta1": m.delta1,
            "num_valid": m.num_valid,
        }
    result = {
        "per_image": per_image,
        "mean": {
            key: float(np.mean([m[key] for m in per_image.values()]))
            for key in ("abs_rel", "rmse", "delta1")
        },
    }
    fileio.dump_json(result, args.output)
    print(
        f"abs_rel = {_fmt(result['mean']['abs_rel'])}, "
        f"rmse = {_fmt(result['mean']['rmse'])}, "
        f"delta1 = {_fmt(result['mean']['delta1'])}"
    )
    return 0


def _cmd_lift(args) -> int:
    depth = fileio.load_depth_png(args.depth)
    intrinsics = fileio.load_intrinsics(args.intrinsics)
    points = lift_to_pointcloud(depth, intrinsics, stride=args.stride)
    fileio.save_pointcloud_csv(points, args.output)
    print(f"lifted {len(points)} points -> {args.output}")
    return 0


def _cmd_resize_depth(args) -> int:
    values = fileio.load_depth_png(args.input)
    resized = resize_preserving(SparseDepthMap(values=values), args.width, args.height)
    fileio.save_depth_png(resized.values, args.output)
    print(f"resized to {args.width}x{args.height} -> {args.output}")
    return 0


def _cmd_synth(args) -> int:
    noise = NoiseProfile(
        center_sigma=args.center_noise,
        size_sigma=args.size_noise,
        yaw_sigma=args.yaw_noise,
        temperature=args.temperature,
    )
    manifest = generate_dataset(
        args.output,
        seed=args.seed,
        num_images=args.images,
        boxes_per_image=args.boxes,
        noise=noise,
    )
    print(f"wrote {len(manifest['files'])} files -> {args.output}")
    return 0


# -- scripting API boundary ------------------------------------------------------
#
# `mono3d api` reads a JSON request (or {"requests": [...]} batch) on stdin
# or from --request, evaluates the named operation on plain nested-array
# arguments, and writes the JSON result to stdout.  This is the supported
# entry point for non-Python callers.


def _components_from_dict(data) -> Box3DComponents:
    from .geometry import Quaternion

    return Box3DComponents(
        orientation=Quaternion(*data["orientation"]),
        projected_center=tuple(data["projected_center"]),
        depth=data["depth"],
        size=tuple(data["size"]),
    )


def _intrinsics_from_dict(data) -> CameraIntrinsics:
    return CameraIntrinsics(fx=data["fx"], fy=data["fy"], px=data["px"], py=data["py"])


def _api_decode_detections(args):
    grids = [fileio.grid_from_dict(level) for level in args["levels"]]
    dets = decode_detections(
        grids,
        _intrinsics_from_dict(args["intrinsics"]),
        LevelParams(
            sigma=tuple(args["params"]["sigma"]),
            mu=tuple(args["params"]["mu"]),
            alpha=tuple(args["params"]["alpha"]),
            c=args["params"]["c"],
        ),
        CanonicalSizes(
            sizes={int(k): tuple(v) for k, v in args["canonical_sizes"].items()}
        ),
        args["score_floor"],
        camera_id=args.get("camera_id"),
    )
    return {"detections": [fileio.detection_to_dict(d) for d in dets]}


def _api_disentangled_l3d(args):
    loss = disentangled_l3d(
        _components_from_dict(args["pred"]),
        fileio.box3d_from_dict(args["gt_box"]),
        _components_from_dict(args["gt"]),
        _intrinsics_from_dict(args["intrinsics"]),
    )
    return {"replicas": list(loss.replicas()), "total": loss.total}


def _api_dense_depth_loss(args):
    pred_maps = [np.asarray(m, dtype=float) for m in args["pred_maps"]]
    gt = SparseDepthMap(values=np.asarray(args["gt"], dtype=float))
    return {"loss": dense_depth_loss(pred_maps, gt)}


def _api_confidence_target(args):
    return {"p_star": confidence_target(args["l3d_total"], args.get("temperature", 1.0))}


def _api_nms_2d(args):
    dets = [fileio.detection_from_dict(d) for d in args["detections"]]
    kept = nms_2d(dets, args["iou_threshold"])
    return {"detections": [fileio.detection_to_dict(d) for d in kept]}


def _api_ap_r40(args):
    dets = {
        key: [fileio.detection_from_dict(d) for d in entries]
        for key, entries in args["detections"].items()
    }
    gts = {
        key: [fileio.ground_truth_from_dict(g) for g in entries]
        for key, entries in args["ground_truth"].items()
    }
    config = fileio.eval_config_from_dict(args.get("config", {}))
    return {"ap": ap_r40(dets, gts, args["class_id"], config)}


def _api_depth_metrics(args):
    gt = SparseDepthMap(values=np.asarray(args["gt"], dtype=float))
    m = depth_metrics(np.asarray(args["pred"], dtype=float), gt, cap=args.get("cap", 80.0))
    return {
        "abs_rel": m.abs_rel,
        "rmse": m.rmse,
        "delta1": m.delta1,
        "num_valid": m.num_valid,
    }


_API_OPS = {
    "decode_detections": _api_decode_detections,
    "disentangled_l3d": _api_disentangled_l3d,
    "dense_depth_loss": _api_dense_depth_loss,
    "confidence_target": _api_confidence_target,
    "nms_2d": _api_nms_2d,
    "ap_r40": _api_ap_r40,
    "depth_metrics": _api_depth_metrics,
}


def _run_api_request(request) -> dict:
    op = request.get("op")
    if op not in _API_OPS:
        raise ValueError(f"unknown api op: {op!r}")
    return _API_OPS[op](request.get("args", {}))


def _cmd_api(args) -> int:
    if args.request == "-":
        request = json.loads(sys.stdin.read())
    else:
        request = fileio.load_json(args.request)
    if "requests" in request:
        response = {"results": [_run_api_request(r) for r in request["requests"]]}
    else:
        response = _run_api_request(request)
    sys.stdout.write(json.dumps(response, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mono3d",
        description="Geometry, losses, and metrics for monocular 3D detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode head outputs into detections")
    p.add_argument("--head-outputs", required=True)
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--canonical-sizes", required=True)
    p.add_argument("--score-floor", type=float, default=0.05)
    p.add_argument("--camera-id", type=int, default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("nms", help="suppress duplicate detections")
    p.add_argument("--detections", required=True)
    p.add_argument("--mode", choices=("2d", "bev"), default="2d")
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--extrinsics", default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_nms)

    p = sub.add_parser("eval", help="AP / TP-error evaluation over a dataset")
    p.add_argument("--detections", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--pr-dir", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("depth-metrics", help="depth error metrics over a dataset")
    p.add_argument("--pred", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--cap", type=float, default=80.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_depth_metrics)

    p = sub.add_parser("lift", help="lift a depth map to a point cloud CSV")
    p.add_argument("--depth", required=True)
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_lift)

    p = sub.add_parser("resize-depth", help="sparsity-preserving depth resize")
    p.add_argument("--input", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_resize_depth)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--images", type=int, default=10)
    p.add_argument("--boxes", type=int, default=5)
    p.add_argument("--center-noise", type=float, default=0.0)
    p.add_argument("--size-noise", type=float, default=0.0)
    p.add_argument("--yaw-noise", type=float, default=0.0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("api", help="evaluate a JSON operation request")
    p.add_argument("--request", default="-", help="request file, or - for stdin")
    p.set_defaults(func=_cmd_api)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MONO3D_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UndefinedMetricError, EmptyMaskError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
