"""Sparse/dense depth-map handling: sparsity-preserving resize, bilinear
upsampling, depth error metrics, and lifting to a point cloud.

A sparse map stores meters per pixel with 0 meaning "no measurement".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, unproject

DEFAULT_DEPTH_CAP = 80.0
DELTA_THRESHOLD = 1.25


class EmptyMaskError(ValueError):
    """Raised when depth metrics are requested with no valid pixels."""


@dataclass(frozen=True)
class SparseDepthMap:
    """Row-major grid of nonnegative depths; 0 encodes a missing value."""

    values: np.ndarray  # (H, W) float

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError(f"depth map must be 2D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("depth map contains non-finite values")
        if np.any(self.values < 0):
            raise ValueError("depth map contains negative values")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def resize_preserving(depth_map: SparseDepthMap, new_w: int, new_h: int) -> SparseDepthMap:
    """Resize a sparse map by scattering every nonzero value to its
    nearest-neighbor pixel in the target grid.

    Unlike a naive nearest-neighbor resample, no measurement is ever lost
    to interpolation against zeros.  Target coordinates are
    round-half-up(u * new_w / w) clamped to bounds; when two measurements
    collide the smaller depth (nearer surface) wins.
    """
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target size must be at least 1x1, got {new_w}x{new_h}")
    h, w = depth_map.values.shape
    out = np.full((new_h, new_w), np.inf)
    rows, cols = np.nonzero(depth_map.values)
    tu = np.minimum(np.floor(cols * (new_w / w) + 0.5).astype(int), new_w - 1)
    tv = np.minimum(np.floor(rows * (new_h / h) + 0.5).astype(int), new_h - 1)
    np.minimum.at(out, (tv, tu), depth_map.values[rows, cols])
    out[np.isinf(out)] = 0.0
    return SparseDepthMap(values=out)


def bilinear_upsample(grid: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear interpolation with the align-corners convention: source
    corner samples map exactly onto target corner samples."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or grid.size == 0:
        raise ValueError("source grid must be a nonempty 2D array")
    h, w = grid.shape
    x = np.linspace(0.0, w - 1.0, target_w) if target_w > 1 else np.zeros(1)
    y = np.linspace(0.0, h - 1.0, target_h) if target_h > 1 else np.zeros(1)
    x0 = np.clip(np.floor(x).astype(int), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(y).astype(int), 0, max(h - 2, 0))
    fx = x - x0
    fy = y - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = grid[y0[:, None], x0[None, :]] * (1 - fx) + grid[y0[:, None], x1[None, :]] * fx
    bot = grid[y1[:, None], x0[None, :]] * (1 - fx) + grid[y1[:, None], x1[None, :]] * fx
    return top * (1 - fy[:, None]) + bot * fy[:, None]


@dataclass(frozen=True)
class DepthMetrics:
    """Depth error summary over valid pixels."""

    abs_rel: float
    rmse: float
    delta1: float  # fraction with max(pred/gt, gt/pred) < 1.25
    num_valid: int


def depth_metrics(
    pred: np.ndarray, gt: SparseDepthMap, cap: float = DEFAULT_DEPTH_CAP
) -> DepthMetrics:
    """Errors over pixels where 0 < gt <= cap; raises if none qualify."""
    pred = np.asarray(pred, dtype=float)
    if pred.shape != gt.values.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.values.shape}")
    mask = (gt.values > 0) & (gt.values <= cap)
    if not mask.any():
        raise EmptyMaskError("no valid ground-truth pixels under the depth cap")
    g = gt.values[mask]
    p = pred[mask]
    abs_rel = float(np.mean(np.abs(p - g) / g))
    rmse = float(np.sqrt(np.mean((p - g) ** 2)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.maximum(p / g, g / p)
    delta1 = float(np.mean(ratio < DELTA_THRESHOLD))
    return DepthMetrics(abs_rel=abs_rel, rmse=rmse, delta1=delta1, num_valid=int(mask.sum()))


def lift_to_pointcloud(
    depth: SparseDepthMap | np.ndarray, intrinsics: CameraIntrinsics, stride: int = 1
) -> np.ndarray:
    """Unproject every valid pixel (depth > 0) on a subsampled grid.

    Returns an (N, 3) array of camera-frame points in row-major scan order.
    """
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    values = depth.values if isinstance(depth, SparseDepthMap) else np.asarray(depth, dtype=float)
    points = []
    for v in range(0, values.shape[0], stride):
        for u in range(0, values.shape[1], stride):
            d = values[v, u]
            if d > 0:
                points.append(unproject(intrinsics, float(u), float(v), float(d)))
    return np.array(points) if points else np.empty((0, 3))
