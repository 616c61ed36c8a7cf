"""Camera-aware monocular 3D detection toolkit: box decoding from raw head
outputs, training losses, duplicate suppression, depth-map utilities, and
detection metrics."""

from .camera import CameraIntrinsics, Pose, pixel_size, project, rescale_intrinsics, transform_point, unproject
from .decode import (
    CanonicalSizes,
    HeadOutput,
    HeadOutputGrid,
    LevelParams,
    ScoredBox3D,
    decode_center,
    decode_depth,
    decode_detections,
    decode_pixel_depth,
    decode_size,
    encode_depth,
    fuse_confidence,
    init_level_params,
)
from .depthmap import (
    DepthMetrics,
    SparseDepthMap,
    bilinear_upsample,
    depth_metrics,
    lift_to_pointcloud,
    resize_preserving,
)
from .evaluation import (
    EvalConfig,
    GroundTruthBox,
    TruePositiveMetrics,
    UndefinedMetricError,
    ap_r40,
    assign_difficulty,
    mean_ap,
    tp_metrics,
)
from .geometry import (
    BevPolygon,
    Box2D,
    Box3D,
    Quaternion,
    allo_to_ego,
    bev_polygon,
    corners,
    ego_to_allo,
    iou_2d,
    iou_3d,
    iou_bev,
    yaw_of,
)
from .losses import (
    AssignmentResult,
    Box3DComponents,
    DisentangledLoss,
    LevelLocations,
    assign_targets,
    box_from_components,
    centerness_loss,
    components_from_box,
    confidence_loss,
    confidence_target,
    dense_depth_loss,
    disentangled_l3d,
    focal_loss,
    grid_locations,
    iou_loss_2d,
    total_loss,
)
from .nms import nms_2d, nms_bev_global

__version__ = "0.1.0"

__all__ = [
    "AssignmentResult",
    "BevPolygon",
    "Box2D",
    "Box3D",
    "Box3DComponents",
    "CameraIntrinsics",
    "CanonicalSizes",
    "DepthMetrics",
    "DisentangledLoss",
    "EvalConfig",
    "GroundTruthBox",
    "HeadOutput",
    "HeadOutputGrid",
    "LevelLocations",
    "LevelParams",
    "Pose",
    "Quaternion",
    "ScoredBox3D",
    "SparseDepthMap",
    "TruePositiveMetrics",
    "UndefinedMetricError",
    "allo_to_ego",
    "ap_r40",
    "assign_difficulty",
    "assign_targets",
    "bev_polygon",
    "bilinear_upsample",
    "box_from_components",
    "centerness_loss",
    "components_from_box",
    "confidence_loss",
    "confidence_target",
    "corners",
    "decode_center",
    "decode_depth",
    "decode_detections",
    "decode_pixel_depth",
    "decode_size",
    "dense_depth_loss",
    "depth_metrics",
    "disentangled_l3d",
    "ego_to_allo",
    "encode_depth",
    "focal_loss",
    "fuse_confidence",
    "grid_locations",
    "init_level_params",
    "iou_2d",
    "iou_3d",
    "iou_bev",
    "iou_loss_2d",
    "lift_to_pointcloud",
    "mean_ap",
    "nms_2d",
    "nms_bev_global",
    "pixel_size",
    "project",
    "rescale_intrinsics",
    "resize_preserving",
    "tp_metrics",
    "total_loss",
    "transform_point",
    "unproject",
    "yaw_of",
]
