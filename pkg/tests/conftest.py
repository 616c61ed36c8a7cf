"""Shared fixtures and independent oracle helpers.

Oracles here deliberately re-derive geometry from first principles
(Rodrigues rotations, point-sampling, explicit loops) so they do not share
code paths with the package under test.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from mono3d import Box2D, Box3D, CameraIntrinsics, Quaternion


def rodrigues_matrix(axis, angle: float) -> np.ndarray:
    """Rotation matrix from axis-angle via the Rodrigues formula."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def quat_matrix_oracle(q: Quaternion) -> np.ndarray:
    """Quaternion-to-matrix via the rotated-basis formula (textbook form,
    independent of the package implementation)."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
        ]
    )


def random_quaternion(rng: np.random.Generator) -> Quaternion:
    q = rng.normal(size=4)
    q = q / np.linalg.norm(q)
    return Quaternion(*[float(c) for c in q])


def random_intrinsics(rng: np.random.Generator) -> CameraIntrinsics:
    return CameraIntrinsics(
        fx=float(rng.uniform(200.0, 1500.0)),
        fy=float(rng.uniform(200.0, 1500.0)),
        px=float(rng.uniform(100.0, 1000.0)),
        py=float(rng.uniform(100.0, 600.0)),
    )


def yaw_box(
    cx: float, cy: float, cz: float, w: float, h: float, d: float, yaw: float
) -> Box3D:
    return Box3D(
        center=(cx, cy, cz),
        size=(w, h, d),
        orientation=Quaternion.from_axis_angle([0.0, 1.0, 0.0], yaw),
    )


def random_yaw_box(rng: np.random.Generator, spread: float = 4.0) -> Box3D:
    return yaw_box(
        cx=float(rng.uniform(-spread, spread)),
        cy=float(rng.uniform(-1.0, 1.0)),
        cz=float(rng.uniform(10.0, 10.0 + spread)),
        w=float(rng.uniform(0.5, 3.0)),
        h=float(rng.uniform(0.5, 2.5)),
        d=float(rng.uniform(0.5, 5.0)),
        yaw=float(rng.uniform(-math.pi, math.pi)),
    )


def _box_yaw_center_extent(box: Box3D):
    heading = quat_matrix_oracle(box.orientation) @ np.array([0.0, 0.0, 1.0])
    yaw = math.atan2(heading[0], heading[2])
    return yaw, (box.center[0], box.center[2]), (box.size[0] / 2.0, box.size[2] / 2.0)


def _points_in_footprint(box: Box3D, pts: np.ndarray) -> np.ndarray:
    yaw, (cx, cz), (hw, hd) = _box_yaw_center_extent(box)
    dx = pts[:, 0] - cx
    dz = pts[:, 1] - cz
    c, s = math.cos(-yaw), math.sin(-yaw)
    # Inverse of the ground-plane rotation [[c, s], [-s, c]].
    lx = c * dx + s * dz
    lz = -s * dx + c * dz
    return (np.abs(lx) <= hw) & (np.abs(lz) <= hd)


def _footprint_aabb(box: Box3D):
    yaw, (cx, cz), (hw, hd) = _box_yaw_center_extent(box)
    c, s = math.cos(yaw), math.sin(yaw)
    ex = abs(c * hw) + abs(s * hd)
    ez = abs(s * hw) + abs(c * hd)
    return cx - ex, cx + ex, cz - ez, cz + ez


def mc_iou_bev(box_a: Box3D, box_b: Box3D, rng: np.random.Generator, samples: int) -> float:
    """Monte-Carlo BEV IoU from uniform point sampling over the joint AABB."""
    ax0, ax1, az0, az1 = _footprint_aabb(box_a)
    bx0, bx1, bz0, bz1 = _footprint_aabb(box_b)
    x0, x1 = min(ax0, bx0), max(ax1, bx1)
    z0, z1 = min(az0, bz0), max(az1, bz1)
    pts = np.column_stack(
        [rng.uniform(x0, x1, size=samples), rng.uniform(z0, z1, size=samples)]
    )
    in_a = _points_in_footprint(box_a, pts)
    in_b = _points_in_footprint(box_b, pts)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def mc_iou_3d(box_a: Box3D, box_b: Box3D, rng: np.random.Generator, samples: int) -> float:
    """Monte-Carlo volume IoU for upright boxes."""
    ax0, ax1, az0, az1 = _footprint_aabb(box_a)
    bx0, bx1, bz0, bz1 = _footprint_aabb(box_b)
    ay0, ay1 = box_a.center[1] - box_a.size[1] / 2, box_a.center[1] + box_a.size[1] / 2
    by0, by1 = box_b.center[1] - box_b.size[1] / 2, box_b.center[1] + box_b.size[1] / 2
    x0, x1 = min(ax0, bx0), max(ax1, bx1)
    y0, y1 = min(ay0, by0), max(ay1, by1)
    z0, z1 = min(az0, bz0), max(az1, bz1)
    xz = np.column_stack(
        [rng.uniform(x0, x1, size=samples), rng.uniform(z0, z1, size=samples)]
    )
    ys = rng.uniform(y0, y1, size=samples)
    in_a = _points_in_footprint(box_a, xz) & (ys >= ay0) & (ys <= ay1)
    in_b = _points_in_footprint(box_b, xz) & (ys >= by0) & (ys <= by1)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def corner_signs_oracle() -> np.ndarray:
    """Canonical corner sign table (re-stated independently)."""
    return np.array(
        [
            [-1, -1, -1],
            [-1, -1, +1],
            [-1, +1, +1],
            [-1, +1, -1],
            [+1, +1, -1],
            [+1, +1, +1],
            [+1, -1, +1],
            [+1, -1, -1],
        ],
        dtype=float,
    )


def corners_oracle(box: Box3D) -> np.ndarray:
    """Corner positions rebuilt from the sign table and a matrix oracle."""
    half = 0.5 * np.asarray(box.size)
    rot = quat_matrix_oracle(box.orientation)
    return (corner_signs_oracle() * half) @ rot.T + np.asarray(box.center)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def make_box2d(x1, y1, x2, y2) -> Box2D:
    return Box2D(float(x1), float(y1), float(x2), float(y2))
