"""Seeded synthetic scene generation for reproducible fixtures.

Produces a directory of intrinsics, ground-truth labels (JSON and
KITTI-style text), detections perturbed by a configurable noise profile,
and sparse depth maps, plus a SHA-256 manifest.  Everything is a pure
function of the seed and the flags.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio
from .camera import CameraIntrinsics, Pose, project, unproject
from .decode import CanonicalSizes, ScoredBox3D
from .evaluation import GroundTruthBox, assign_difficulty
from .geometry import Box2D, Box3D, Quaternion, corners
from .losses import components_from_box, confidence_target, disentangled_l3d

DEFAULT_IMAGE_SIZE = (1280, 720)

DEFAULT_CANONICAL_SIZES = CanonicalSizes(
    sizes={0: (1.8, 1.6, 4.2), 1: (0.6, 1.8, 0.6), 2: (0.6, 1.7, 1.8)}
)


@dataclass(frozen=True)
class NoiseProfile:
    """Gaussian perturbations applied to detections, plus the confidence
    temperature used to score them."""

    center_sigma: float = 0.0  # meters, per axis
    size_sigma: float = 0.0  # log-space, per dimension
    yaw_sigma: float = 0.0  # radians
    temperature: float = 1.0


def _projected_box2d(
    box: Box3D, intrinsics: CameraIntrinsics, image_size: tuple[int, int]
) -> Box2D:
    pts = corners(box)
    us, vs = [], []
    for p in pts:
        u, v, _ = project(intrinsics, p)
        us.append(u)
        vs.append(v)
    w, h = image_size
    return Box2D(
        max(min(us), 0.0),
        max(min(vs), 0.0),
        min(max(us), float(w)),
        min(max(vs), float(h)),
    )


def _sample_gt(
    rng: np.random.Generator,
    intrinsics: CameraIntrinsics,
    canon: CanonicalSizes,
    image_size: tuple[int, int],
) -> GroundTruthBox:
    w, h = image_size
    class_id = int(rng.integers(0, len(canon.sizes)))
    depth = float(rng.uniform(8.0, 45.0))
    u = float(rng.uniform(0.2 * w, 0.8 * w))
    v = float(rng.uniform(0.35 * h, 0.65 * h))
    center = unproject(intrinsics, u, v, depth)
    w0, h0, d0 = canon.get(class_id)
    scale = np.exp(rng.normal(0.0, 0.08, size=3))
    size = (w0 * float(scale[0]), h0 * float(scale[1]), d0 * float(scale[2]))
    yaw = float(rng.uniform(-math.pi, math.pi))
    box = Box3D(
        center=tuple(float(c) for c in center),
        size=size,
        orientation=Quaternion.from_axis_angle([0.0, 1.0, 0.0], yaw),
    )
    box2d = _projected_box2d(box, intrinsics, image_size)
    difficulty = assign_difficulty(box2d.height, occlusion=0, truncation=0.0)
    return GroundTruthBox(box=box, box2d=box2d, class_id=class_id, difficulty=difficulty)


def _perturb(
    rng: np.random.Generator,
    gt: GroundTruthBox,
    intrinsics: CameraIntrinsics,
    noise: NoiseProfile,
    image_size: tuple[int, int],
) -> ScoredBox3D:
    jitter = rng.normal(0.0, noise.center_sigma, size=3) if noise.center_sigma > 0 else np.zeros(3)
    scale = (
        np.exp(rng.normal(0.0, noise.size_sigma, size=3))
        if noise.size_sigma > 0
        else np.ones(3)
    )
    dyaw = float(rng.normal(0.0, noise.yaw_sigma)) if noise.yaw_sigma > 0 else 0.0
    center = np.asarray(gt.box.center) + jitter
    center[2] = max(center[2], 0.5)  # keep the box in front of the camera
    size = tuple(float(s * f) for s, f in zip(gt.box.size, scale))
    orientation = (
        Quaternion.from_axis_angle([0.0, 1.0, 0.0], dyaw) * gt.box.orientation
        if dyaw != 0.0
        else gt.box.orientation
    )
    box = Box3D(center=tuple(float(c) for c in center), size=size, orientation=orientation)
    loss = disentangled_l3d(
        components_from_box(box, intrinsics),
        gt.box,
        components_from_box(gt.box, intrinsics),
        intrinsics,
    )
    score = confidence_target(loss.total, noise.temperature)
    return ScoredBox3D(
        box=box,
        box2d=_projected_box2d(box, intrinsics, image_size),
        class_id=gt.class_id,
        score=score,
        camera_id=0,
    )


def _sparse_depth(
    rng: np.random.Generator, image_size: tuple[int, int], num_points: int = 1200
) -> np.ndarray:
    w, h = image_size
    values = np.zeros((h, w))
    us = rng.integers(0, w, size=num_points)
    vs = rng.integers(0, h, size=num_points)
    ds = rng.uniform(3.0, 75.0, size=num_points)
    for u, v, d in zip(us, vs, ds):
        values[v, u] = d
    return values


def generate_dataset(
    out_dir: str | Path,
    seed: int,
    num_images: int,
    boxes_per_image: int,
    noise: NoiseProfile = NoiseProfile(),
    image_size: tuple[int, int] = DEFAULT_IMAGE_SIZE,
) -> dict:
    """Write a full synthetic dataset and return its manifest."""
    out = Path(out_dir)
    for sub in ("gt", "gt_kitti", "detections", "depth"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    fx = float(rng.uniform(700.0, 1000.0))
    intrinsics = CameraIntrinsics(
        fx=fx, fy=fx, px=image_size[0] / 2.0, py=image_size[1] / 2.0
    )
    fileio.save_intrinsics(intrinsics, out / "intrinsics.json")
    fileio.save_extrinsics({0: Pose.identity()}, out / "extrinsics.json")
    fileio.save_canonical_sizes(DEFAULT_CANONICAL_SIZES, out / "canonical_sizes.json")

    for i in range(num_images):
        stem = f"{i:06d}"
        gts = [
            _sample_gt(rng, intrinsics, DEFAULT_CANONICAL_SIZES, image_size)
            for _ in range(boxes_per_image)
        ]
        dets = [_perturb(rng, g, intrinsics, noise, image_size) for g in gts]
        fileio.save_ground_truth(gts, out / "gt" / f"{stem}.json")
        fileio.save_kitti_labels(gts, out / "gt_kitti" / f"{stem}.txt")
        fileio.save_detections(dets, out / "detections" / f"{stem}.json")
        fileio.save_depth_png(_sparse_depth(rng, image_size), out / "depth" / f"{stem}.png")

    manifest = {"seed": seed, "files": _checksums(out)}
    fileio.dump_json(manifest, out / "manifest.json")
    return manifest


def _checksums(root: Path) -> dict[str, str]:
    sums = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            sums[path.relative_to(root).as_posix()] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    return sums
