/** Wire-format types shared with the Python side's JSON boundary. */

export interface Intrinsics {
  fx: number;
  fy: number;
  px: number;
  py: number;
}

export type Vec2 = [number, number];
export type Vec3 = [number, number, number];
export type Vec4 = [number, number, number, number];

export interface Detection {
  class: number;
  score: number;
  box2d: Vec4;
  center: Vec3;
  size: Vec3;
  quaternion: Vec4;
  camera_id: number | null;
}

export type Difficulty = "easy" | "moderate" | "hard" | "ignored";

export interface GroundTruth {
  class: number;
  box2d: Vec4;
  center: Vec3;
  size: Vec3;
  quaternion: Vec4;
  difficulty?: Difficulty;
}

/** The four decoded pieces a 3D box is regressed as. */
export interface BoxComponents {
  /** Egocentric unit quaternion (w, x, y, z). */
  orientation: Vec4;
  /** Projected box center in pixels. */
  projected_center: Vec2;
  /** Center depth in meters, > 0. */
  depth: number;
  /** (W, H, D) in meters. */
  size: Vec3;
}

export interface Box3DRecord {
  center: Vec3;
  size: Vec3;
  quaternion: Vec4;
}

export interface LevelParams {
  sigma: number[];
  mu: number[];
  alpha: number[];
  c: number;
}

/** Dense head outputs for one pyramid level, row-major (H, W, ...) arrays. */
export interface HeadOutputLevel {
  stride: number;
  quat: number[][][];
  z_center: number[][];
  z_pixel: number[][];
  offset: number[][][];
  size_delta: number[][][];
  conf3d_logit: number[][];
  class_logits: number[][][];
  box2d_offsets: number[][][];
}

export interface EvalConfig {
  iou_thresholds?: Record<string, number>;
  default_iou_threshold?: number;
  recall_positions?: number;
  match_metric?: "iou_3d" | "iou_bev" | "center_distance";
  distance_thresholds?: number[];
  tp_distance_threshold?: number;
}

export interface DepthMetricsResult {
  abs_rel: number;
  rmse: number;
  delta1: number;
  num_valid: number;
}

export interface DisentangledLossResult {
  /** (orientation, projected center, depth, size) replica losses. */
  replicas: [number, number, number, number];
  total: number;
}

export interface ApiRequest {
  op: string;
  args: Record<string, unknown>;
}
