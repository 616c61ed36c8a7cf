"""Decoding of raw per-location head outputs into scored metric 3D boxes.

Depth decoding is camera-aware: the network emits a normalized value z
that is mapped to meters as d = (c / p) * (sigma_l * z + mu_l), where p
is the focal pixel size, (sigma_l, mu_l) are per-pyramid-level scale and
offset, and c is a global constant.  Because p halves when the image is
upsampled 2x, the same z decodes to a depth consistent with the resized
intrinsics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .camera import CameraIntrinsics, pixel_size, unproject
from .geometry import Box2D, Box3D, Quaternion, allo_to_ego

DEPTH_SCALE_CONSTANT = 1.0 / 500.0
SIGMA_FLOOR = 0.1

_DEAD_QUAT_NORM = 1e-12


@dataclass(frozen=True)
class LevelParams:
    """Per-pyramid-level depth/offset decoding parameters.

    sigma and mu are the depth scale and offset in meters, alpha the pixel
    offset scale (initialized to the level stride), c the global constant.
    """

    sigma: tuple[float, ...]
    mu: tuple[float, ...]
    alpha: tuple[float, ...]
    c: float = DEPTH_SCALE_CONSTANT

    def __post_init__(self):
        n = len(self.sigma)
        if not (len(self.mu) == n and len(self.alpha) == n):
            raise ValueError("sigma, mu, alpha must have one entry per level")
        if any(s <= 0 for s in self.sigma):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if any(a <= 0 for a in self.alpha):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def num_levels(self) -> int:
        return len(self.sigma)


@dataclass(frozen=True)
class CanonicalSizes:
    """Per-class canonical (W, H, D) box sizes in meters."""

    sizes: Mapping[int, tuple[float, float, float]]

    def __post_init__(self):
        for class_id, whd in self.sizes.items():
            if any(s <= 0 for s in whd):
                raise ValueError(f"canonical size for class {class_id} must be positive: {whd}")

    def get(self, class_id: int) -> tuple[float, float, float]:
        if class_id not in self.sizes:
            raise KeyError(f"no canonical size for class {class_id}")
        return self.sizes[class_id]


@dataclass(frozen=True)
class HeadOutput:
    """The raw per-location regression values plus class logits.

    q_raw is the unnormalized allocentric quaternion (w, x, y, z); z_center
    and z_pixel the normalized box-center and surface depths; (du, dv) the
    projected-center offset in feature units; size_delta the log deviations
    from the canonical size; conf3d_logit the 3D confidence logit.
    box2d_offsets are the (l, t, r, b) distances, in pixels, from the
    location to the sides of the 2D box.
    """

    q_raw: tuple[float, float, float, float]
    z_center: float
    z_pixel: float
    du: float
    dv: float
    size_delta: tuple[float, float, float]
    conf3d_logit: float
    class_logits: tuple[float, ...]
    box2d_offsets: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class HeadOutputGrid:
    """Dense head outputs for one pyramid level, as (H, W, ...) arrays."""

    stride: float
    quat: np.ndarray  # (H, W, 4)
    z_center: np.ndarray  # (H, W)
    z_pixel: np.ndarray  # (H, W)
    offset: np.ndarray  # (H, W, 2)
    size_delta: np.ndarray  # (H, W, 3)
    conf3d_logit: np.ndarray  # (H, W)
    class_logits: np.ndarray  # (H, W, C)
    box2d_offsets: np.ndarray  # (H, W, 4), (l, t, r, b) in pixels

    def __post_init__(self):
        h, w = self.z_center.shape
        expected = {
            "quat": (h, w, 4),
            "z_pixel": (h, w),
            "offset": (h, w, 2),
            "size_delta": (h, w, 3),
            "conf3d_logit": (h, w),
            "box2d_offsets": (h, w, 4),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {getattr(self, name).shape}")
        if self.class_logits.shape[:2] != (h, w) or self.class_logits.ndim != 3:
            raise ValueError(f"class_logits must have shape ({h}, {w}, C)")

    @property
    def shape(self) -> tuple[int, int]:
        return self.z_center.shape

    @property
    def num_classes(self) -> int:
        return self.class_logits.shape[2]

    def location(self, row: int, col: int) -> tuple[float, float]:
        """Image-space (u, v) of a grid cell: the cell center at this stride."""
        return (self.stride * (col + 0.5), self.stride * (row + 0.5))

    def at(self, row: int, col: int) -> HeadOutput:
        return HeadOutput(
            q_raw=tuple(float(c) for c in self.quat[row, col]),
            z_center=float(self.z_center[row, col]),
            z_pixel=float(self.z_pixel[row, col]),
            du=float(self.offset[row, col, 0]),
            dv=float(self.offset[row, col, 1]),
            size_delta=tuple(float(c) for c in self.size_delta[row, col]),
            conf3d_logit=float(self.conf3d_logit[row, col]),
            class_logits=tuple(float(c) for c in self.class_logits[row, col]),
            box2d_offsets=tuple(float(c) for c in self.box2d_offsets[row, col]),
        )

    @staticmethod
    def zeros(height: int, width: int, num_classes: int, stride: float) -> "HeadOutputGrid":
        """All-zero grid with class logits at -inf (no detections)."""
        return HeadOutputGrid(
            stride=stride,
            quat=np.zeros((height, width, 4)),
            z_center=np.zeros((height, width)),
            z_pixel=np.zeros((height, width)),
            offset=np.zeros((height, width, 2)),
            size_delta=np.zeros((height, width, 3)),
            conf3d_logit=np.zeros((height, width)),
            class_logits=np.full((height, width, num_classes), -np.inf),
            box2d_offsets=np.zeros((height, width, 4)),
        )


@dataclass(frozen=True)
class ScoredBox3D:
    """A decoded detection: 3D box, 2D box, class, fused score."""

    box: Box3D
    box2d: Box2D
    class_id: int
    score: float
    camera_id: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


def decode_depth(z: float, intrinsics: CameraIntrinsics, params: LevelParams, level: int) -> float:
    """Unnormalize a depth prediction to meters; may be nonpositive."""
    sigma, mu = params.sigma[level], params.mu[level]
    return params.c / pixel_size(intrinsics) * (sigma * z + mu)


def encode_depth(d: float, intrinsics: CameraIntrinsics, params: LevelParams, level: int) -> float:
    """Inverse of :func:`decode_depth`; maps a metric depth to the
    normalized network target."""
    sigma, mu = params.sigma[level], params.mu[level]
    if sigma == 0:
        raise ValueError("degenerate depth scale sigma=0")
    return (d * pixel_size(intrinsics) / params.c - mu) / sigma


def decode_center(
    intrinsics: CameraIntrinsics,
    u_b: float,
    v_b: float,
    du: float,
    dv: float,
    alpha: float,
    d_c: float,
) -> np.ndarray:
    """Unproject the offset-corrected location at the decoded center depth."""
    if d_c <= 0:
        raise ValueError(f"center depth must be positive, got {d_c}")
    return unproject(intrinsics, u_b + alpha * du, v_b + alpha * dv, d_c)


def decode_size(
    delta: Sequence[float], class_id: int, canon: CanonicalSizes
) -> tuple[float, float, float]:
    """Scale the class canonical size by exp of the predicted deviations."""
    w0, h0, d0 = canon.get(class_id)
    return (w0 * math.exp(delta[0]), h0 * math.exp(delta[1]), d0 * math.exp(delta[2]))


def fuse_confidence(conf3d_logit: float, p_class: float) -> float:
    """Final detection score: class probability times sigmoid(3D logit)."""
    if not 0.0 <= p_class <= 1.0:
        raise ValueError(f"class probability must be in [0, 1], got {p_class}")
    if conf3d_logit >= 0:
        return p_class / (1.0 + math.exp(-conf3d_logit))
    e = math.exp(conf3d_logit)
    return p_class * e / (1.0 + e)


def _decode_quaternion(q_raw: np.ndarray) -> Quaternion:
    norm = float(np.linalg.norm(q_raw))
    if norm < _DEAD_QUAT_NORM:
        return Quaternion.identity()
    q = q_raw / norm
    return Quaternion(float(q[0]), float(q[1]), float(q[2]), float(q[3]))


def decode_detections(
    grids: Sequence[HeadOutputGrid],
    intrinsics: CameraIntrinsics,
    params: LevelParams,
    canon: CanonicalSizes,
    score_floor: float,
    camera_id: int | None = None,
) -> list[ScoredBox3D]:
    """Decode every location whose fused score clears the floor.

    Per location the best class is taken; its probability is fused with the
    3D confidence.  Kept locations are decoded to a metric box: quaternion
    normalized and converted from allocentric using the decoded-center ray,
    depth unnormalized, center unprojected, size scaled from the class
    canonical size, and the 2D box rebuilt from the side offsets.
    Locations with nonpositive decoded depth or zero score are dropped.
    """
    if len(grids) != params.num_levels:
        raise ValueError(f"got {len(grids)} grids for {params.num_levels} levels")
    detections: list[ScoredBox3D] = []
    for level, grid in enumerate(grids):
        probs = _sigmoid(grid.class_logits)
        class_ids = np.argmax(probs, axis=2)
        p_class = np.take_along_axis(probs, class_ids[..., None], axis=2)[..., 0]
        scores = p_class * _sigmoid(grid.conf3d_logit)
        keep = (scores >= score_floor) & (scores > 0.0)
        for row, col in np.argwhere(keep):
            d_c = decode_depth(float(grid.z_center[row, col]), intrinsics, params, level)
            if d_c <= 0:
                continue
            u_b, v_b = grid.location(row, col)
            du, dv = grid.offset[row, col]
            center = decode_center(
                intrinsics, u_b, v_b, float(du), float(dv), params.alpha[level], d_c
            )
            q_ego = allo_to_ego(_decode_quaternion(grid.quat[row, col]), center)
            class_id = int(class_ids[row, col])
            size = decode_size(grid.size_delta[row, col], class_id, canon)
            l, t, r, b = grid.box2d_offsets[row, col]
            detections.append(
                ScoredBox3D(
                    box=Box3D(center=tuple(float(c) for c in center), size=size, orientation=q_ego),
                    box2d=Box2D(u_b - float(l), v_b - float(t), u_b + float(r), v_b + float(b)),
                    class_id=class_id,
                    score=float(scores[row, col]),
                    camera_id=camera_id,
                )
            )
    return detections


def decode_pixel_depth(
    grids: Sequence[HeadOutputGrid], intrinsics: CameraIntrinsics, params: LevelParams
) -> list[np.ndarray]:
    """Metric per-pixel depth grids, one low-resolution map per level.

    Upsampling to the input resolution is a separate concern; see
    :func:`mono3d.depthmap.bilinear_upsample`.
    """
    if len(grids) != params.num_levels:
        raise ValueError(f"got {len(grids)} grids for {params.num_levels} levels")
    scale = params.c / pixel_size(intrinsics)
    return [
        scale * (params.sigma[level] * grid.z_pixel + params.mu[level])
        for level, grid in enumerate(grids)
    ]


def init_level_params(
    depths_per_level: Sequence[Sequence[float]],
    strides: Sequence[float],
    c: float = DEPTH_SCALE_CONSTANT,
) -> LevelParams:
    """Data-driven initialization of the per-level decoding parameters.

    mu and sigma are the mean and population standard deviation of the
    ground-truth box depths assigned to each level; alpha is the level
    stride.  A level with no boxes falls back to the global statistics
    (with a warning), and sigma is floored at SIGMA_FLOOR to stay
    invertible.
    """
    if len(depths_per_level) != len(strides):
        raise ValueError("need one stride per level")
    all_depths = [d for level in depths_per_level for d in level]
    if not all_depths:
        raise ValueError("no box depths given for any level")
    global_mu = float(np.mean(all_depths))
    global_sigma = float(np.std(all_depths))
    mu, sigma = [], []
    for i, level_depths in enumerate(depths_per_level):
        if len(level_depths) == 0:
            warnings.warn(f"level {i} has no boxes; falling back to global depth statistics")
            mu.append(global_mu)
            sigma.append(max(global_sigma, SIGMA_FLOOR))
        else:
            mu.append(float(np.mean(level_depths)))
            sigma.append(max(float(np.std(level_depths)), SIGMA_FLOOR))
    return LevelParams(
        sigma=tuple(sigma), mu=tuple(mu), alpha=tuple(float(s) for s in strides), c=c
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
