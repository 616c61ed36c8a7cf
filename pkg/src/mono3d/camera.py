"""Pinhole camera model: intrinsics, pixel size, projection, extrinsics.

Conventions, fixed for the whole package:

- Camera frame: x right, y down, z forward. A "depth" is always the
  z-coordinate of a point in the camera frame, never the ray length.
- Pixel coordinates: u right, v down, origin at the top-left corner.
- Quaternions are Hamilton, (w, x, y, z) component order, encoding
  right-handed rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsic parameters, all in pixels."""

    fx: float
    fy: float
    px: float
    py: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.px], [0.0, self.fy, self.py], [0.0, 0.0, 1.0]],
            dtype=float,
        )


def pixel_size(intrinsics: CameraIntrinsics) -> float:
    """Metric footprint of a focal pixel: sqrt(1/fx^2 + 1/fy^2).

    Halves exactly when both focal lengths double, which is what makes
    depth decoding invariant to image resizing.
    """
    return math.sqrt(1.0 / intrinsics.fx**2 + 1.0 / intrinsics.fy**2)


def rescale_intrinsics(intrinsics: CameraIntrinsics, rx: float, ry: float) -> CameraIntrinsics:
    """Intrinsics of the same camera after resizing the image by (rx, ry).

    Scales the first two rows of K, so the principal point moves with the
    focal lengths.
    """
    if not (rx > 0 and ry > 0):
        raise ValueError(f"resize ratios must be positive, got rx={rx}, ry={ry}")
    return CameraIntrinsics(
        fx=rx * intrinsics.fx,
        fy=ry * intrinsics.fy,
        px=rx * intrinsics.px,
        py=ry * intrinsics.py,
    )


def unproject(intrinsics: CameraIntrinsics, u: float, v: float, depth: float) -> np.ndarray:
    """Lift pixel (u, v) at metric depth to a camera-frame 3D point.

    Returns K^-1 (u, v, 1)^T * depth; the z-component equals `depth` exactly.
    """
    if depth <= 0:
        raise ValueError(f"depth must be positive, got {depth}")
    return np.array(
        [
            (u - intrinsics.px) / intrinsics.fx * depth,
            (v - intrinsics.py) / intrinsics.fy * depth,
            depth,
        ]
    )


def project(intrinsics: CameraIntrinsics, point: np.ndarray) -> tuple[float, float, float]:
    """Project a camera-frame 3D point to (u, v, depth)."""
    x, y, z = float(point[0]), float(point[1]), float(point[2])
    if z <= 0:
        raise ValueError(f"point is behind the camera: z={z}")
    return (
        intrinsics.fx * x / z + intrinsics.px,
        intrinsics.fy * y / z + intrinsics.py,
        z,
    )


def _quat_normalized(wxyz: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(wxyz))
    if norm == 0.0:
        raise ValueError("zero-norm quaternion")
    return wxyz / norm


def _quat_to_matrix(wxyz: np.ndarray) -> np.ndarray:
    w, x, y, z = wxyz
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


@dataclass(frozen=True)
class Pose:
    """Rigid transform (rotation then translation), e.g. camera-to-global.

    `rotation` is a unit quaternion as (w, x, y, z); `translation` is a
    3-vector in meters.
    """

    rotation: tuple[float, float, float, float]
    translation: tuple[float, float, float]

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.rotation))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"pose rotation must be a unit quaternion, norm={norm}")

    @staticmethod
    def identity() -> "Pose":
        return Pose(rotation=(1.0, 0.0, 0.0, 0.0), translation=(0.0, 0.0, 0.0))

    def rotation_matrix(self) -> np.ndarray:
        return _quat_to_matrix(np.array(self.rotation))

    def inverse(self) -> "Pose":
        w, x, y, z = self.rotation
        conj = np.array([w, -x, -y, -z])
        t_inv = -_quat_to_matrix(conj) @ np.array(self.translation)
        return Pose(rotation=(w, -x, -y, -z), translation=tuple(float(c) for c in t_inv))

    def compose(self, other: "Pose") -> "Pose":
        """Pose equivalent to applying `other` first, then `self`."""
        q = _quat_normalized(_quat_multiply(np.array(self.rotation), np.array(other.rotation)))
        t = self.rotation_matrix() @ np.array(other.translation) + np.array(self.translation)
        return Pose(rotation=tuple(float(c) for c in q), translation=tuple(float(c) for c in t))


def transform_point(pose: Pose, point: np.ndarray) -> np.ndarray:
    """Apply the pose's rotation then translation to a 3D point."""
    return pose.rotation_matrix() @ np.asarray(point, dtype=float) + np.array(pose.translation)
