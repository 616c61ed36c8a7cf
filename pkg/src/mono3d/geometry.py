"""3D/2D box types, orientation conversions, corners, and rotated-box IoU.

Orientation is stored as a Hamilton unit quaternion (w, x, y, z).  The
allocentric <-> egocentric conversion rotates by the minimal geodesic
rotation that takes the camera forward axis (0, 0, 1) onto the viewing
ray toward the object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_PARALLEL_EPS = 1e-12


@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float
    y: float
    z: float

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "Quaternion":
        axis = np.asarray(axis, dtype=float)
        norm = float(np.linalg.norm(axis))
        if norm == 0.0:
            raise ValueError("rotation axis must have nonzero norm")
        half = 0.5 * angle
        s = math.sin(half) / norm
        return Quaternion(math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalize(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def rotate(self, vec) -> np.ndarray:
        return self.rotation_matrix() @ np.asarray(vec, dtype=float)

    def geodesic_distance(self, other: "Quaternion") -> float:
        """Rotation angle between two unit quaternions, in [0, pi].

        Uses atan2 on the relative rotation, which stays accurate for
        nearly identical quaternions where acos(dot) loses precision.
        """
        rel = self.conjugate() * other
        vec = math.sqrt(rel.x**2 + rel.y**2 + rel.z**2)
        return 2.0 * math.atan2(vec, abs(rel.w))


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned pixel box with x1 <= x2 and y1 <= y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"degenerate 2D box: ({self.x1},{self.y1})-({self.x2},{self.y2})")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class Box3D:
    """Metric 3D box: center, (W, H, D) size, egocentric orientation.

    W spans the local x axis, H the local y axis (vertical, since camera
    y points down), and D the local z axis (heading).
    """

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    orientation: Quaternion

    def __post_init__(self):
        if any(s <= 0 for s in self.size):
            raise ValueError(f"box size must be positive, got {self.size}")


# Sign patterns (sx, sy, sz) over the local half-extents, in a fixed cyclic
# order so that corner k of one box always corresponds to corner k of another.
_CORNER_SIGNS = np.array(
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


def corners(box: Box3D) -> np.ndarray:
    """The 8 vertices of a box as an (8, 3) array, in canonical order."""
    half = 0.5 * np.asarray(box.size, dtype=float)
    local = _CORNER_SIGNS * half
    return local @ box.orientation.rotation_matrix().T + np.asarray(box.center, dtype=float)


def allo_to_ego(q_allo: Quaternion, ray) -> Quaternion:
    """Convert a view-ray-relative orientation into the camera frame.

    `ray` is any vector from the camera center toward the object (positive
    z required).  The result is q_ray * q_allo, where q_ray is the minimal
    rotation taking (0, 0, 1) onto ray/|ray|.
    """
    return _ray_rotation(ray) * q_allo


def ego_to_allo(q_ego: Quaternion, ray) -> Quaternion:
    """Exact inverse of :func:`allo_to_ego` for the same ray."""
    return _ray_rotation(ray).conjugate() * q_ego


def _ray_rotation(ray) -> Quaternion:
    ray = np.asarray(ray, dtype=float)
    norm = float(np.linalg.norm(ray))
    if norm == 0.0:
        raise ValueError("view ray must have nonzero norm")
    if ray[2] <= 0.0:
        raise ValueError(f"view ray must point in front of the camera, got z={ray[2]}")
    r = ray / norm
    axis = np.array([-r[1], r[0], 0.0])  # cross((0,0,1), r)
    s = float(np.linalg.norm(axis))
    if s < _PARALLEL_EPS:
        return Quaternion.identity()
    angle = math.atan2(s, r[2])
    return Quaternion.from_axis_angle(axis, angle)


def iou_2d(a: Box2D, b: Box2D) -> float:
    """Intersection-over-union of two axis-aligned pixel boxes."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area() + b.area() - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class BevPolygon:
    """Convex footprint in the x-z ground plane, counterclockwise.

    Vertices are an (N, 2) array of (x, z) pairs with positive signed area.
    """

    vertices: np.ndarray

    def __post_init__(self):
        if self.signed_area() <= 0:
            raise ValueError("BEV polygon must be counterclockwise with positive area")

    def signed_area(self) -> float:
        return _shoelace(self.vertices)


def _shoelace(vertices: np.ndarray) -> float:
    x = vertices[:, 0]
    z = vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(z, -1)) - np.dot(z, np.roll(x, -1)))


def yaw_of(box: Box3D) -> float:
    """Heading angle of the box's local +z axis in the x-z ground plane."""
    heading = box.orientation.rotate([0.0, 0.0, 1.0])
    return math.atan2(heading[0], heading[2])


def bev_polygon(box: Box3D) -> BevPolygon:
    """Ground-plane footprint of the box, reduced to its yaw component."""
    yaw = yaw_of(box)
    c, s = math.cos(yaw), math.sin(yaw)
    w, _, d = (0.5 * e for e in box.size)
    # Local (x, z) rectangle corners in counterclockwise order.
    local = np.array([[w, d], [-w, d], [-w, -d], [w, -d]])
    rot = np.array([[c, s], [-s, c]])
    cx, _, cz = box.center
    return BevPolygon(vertices=local @ rot.T + np.array([cx, cz]))


def _clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of `subject` by convex CCW polygon `clip`."""
    output = [tuple(p) for p in subject]
    for i in range(len(clip)):
        if not output:
            break
        a = clip[i]
        b = clip[(i + 1) % len(clip)]
        edge = (b[0] - a[0], b[1] - a[1])
        points = output
        output = []
        prev = points[-1]
        prev_in = edge[0] * (prev[1] - a[1]) - edge[1] * (prev[0] - a[0]) >= 0
        for cur in points:
            cur_in = edge[0] * (cur[1] - a[1]) - edge[1] * (cur[0] - a[0]) >= 0
            if cur_in != prev_in:
                output.append(_edge_intersection(a, b, prev, cur))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    return np.array(output) if output else np.empty((0, 2))


def _edge_intersection(a, b, p, q) -> tuple[float, float]:
    da = (b[0] - a[0], b[1] - a[1])
    dp = (q[0] - p[0], q[1] - p[1])
    denom = da[0] * dp[1] - da[1] * dp[0]
    t = ((p[0] - a[0]) * dp[1] - (p[1] - a[1]) * dp[0]) / denom
    return (a[0] + t * da[0], a[1] + t * da[1])


def _bev_intersection_area(a: Box3D, b: Box3D) -> float:
    inter = _clip_polygon(bev_polygon(a).vertices, bev_polygon(b).vertices)
    if len(inter) < 3:
        return 0.0
    return abs(_shoelace(inter))


def iou_bev(a: Box3D, b: Box3D) -> float:
    """IoU of the two ground-plane footprints (yaw-only rotated rectangles)."""
    area_a = a.size[0] * a.size[2]
    area_b = b.size[0] * b.size[2]
    if area_a <= 0 or area_b <= 0:
        return 0.0
    inter = _bev_intersection_area(a, b)
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return min(1.0, inter / union)


def iou_3d(a: Box3D, b: Box3D) -> float:
    """Volume IoU treating both boxes as upright (yaw-only) prisms.

    The intersection volume is the BEV footprint intersection times the
    overlap of the vertical (y) extents taken from center and height.
    """
    vol_a = a.size[0] * a.size[1] * a.size[2]
    vol_b = b.size[0] * b.size[1] * b.size[2]
    if vol_a <= 0 or vol_b <= 0:
        return 0.0
    ya0, ya1 = a.center[1] - a.size[1] / 2, a.center[1] + a.size[1] / 2
    yb0, yb1 = b.center[1] - b.size[1] / 2, b.center[1] + b.size[1] / 2
    y_overlap = min(ya1, yb1) - max(ya0, yb0)
    if y_overlap <= 0:
        return 0.0
    inter = _bev_intersection_area(a, b) * y_overlap
    union = vol_a + vol_b - inter
    if union <= 0:
        return 0.0
    return min(1.0, inter / union)
