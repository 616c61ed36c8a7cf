/**
 * Array-in/array-out wrapper over the Python mono3d toolkit.
 *
 * Every call crosses the documented process boundary: a JSON request is
 * piped to `python -m mono3d.cli api` and the JSON result is returned
 * unchanged, so values are exactly what the native library produced.
 * Data is plain nested row-major arrays plus small metadata records.
 */

import { spawnSync } from "node:child_process";

import type {
  ApiRequest,
  Box3DRecord,
  BoxComponents,
  DepthMetricsResult,
  Detection,
  DisentangledLossResult,
  EvalConfig,
  GroundTruth,
  HeadOutputLevel,
  Intrinsics,
  LevelParams,
} from "./types";

export * from "./types";

const PYTHON = process.env.MONO3D_PYTHON ?? "python3";
const MAX_BUFFER = 512 * 1024 * 1024;

/** Evaluate a batch of raw api requests in one interpreter invocation. */
export function runRequests(requests: ApiRequest[]): unknown[] {
  const proc = spawnSync(PYTHON, ["-m", "mono3d.cli", "api", "--request", "-"], {
    input: JSON.stringify({ requests }),
    encoding: "utf8",
    maxBuffer: MAX_BUFFER,
  });
  if (proc.error) {
    throw proc.error;
  }
  if (proc.status !== 0) {
    throw new Error(proc.stderr.trim() || `mono3d api exited with ${proc.status}`);
  }
  return (JSON.parse(proc.stdout) as { results: unknown[] }).results;
}

function runOne<T>(op: string, args: Record<string, unknown>): T {
  return runRequests([{ op, args }])[0] as T;
}

export interface DecodeDetectionsArgs {
  levels: HeadOutputLevel[];
  intrinsics: Intrinsics;
  params: LevelParams;
  /** class id -> (W0, H0, D0) canonical size in meters. */
  canonical_sizes: Record<string, [number, number, number]>;
  score_floor: number;
  camera_id?: number;
}

export function decodeDetections(args: DecodeDetectionsArgs): Detection[] {
  return runOne<{ detections: Detection[] }>("decode_detections", { ...args }).detections;
}

export function disentangledL3d(
  pred: BoxComponents,
  gtBox: Box3DRecord,
  gt: BoxComponents,
  intrinsics: Intrinsics,
): DisentangledLossResult {
  return runOne<DisentangledLossResult>("disentangled_l3d", {
    pred,
    gt_box: gtBox,
    gt,
    intrinsics,
  });
}

export function denseDepthLoss(predMaps: number[][][], gt: number[][]): number {
  return runOne<{ loss: number }>("dense_depth_loss", { pred_maps: predMaps, gt }).loss;
}

export function confidenceTarget(l3dTotal: number, temperature = 1.0): number {
  return runOne<{ p_star: number }>("confidence_target", {
    l3d_total: l3dTotal,
    temperature,
  }).p_star;
}

export function nms2d(detections: Detection[], iouThreshold: number): Detection[] {
  return runOne<{ detections: Detection[] }>("nms_2d", {
    detections,
    iou_threshold: iouThreshold,
  }).detections;
}

export function apR40(
  detections: Record<string, Detection[]>,
  groundTruth: Record<string, GroundTruth[]>,
  classId: number,
  config: EvalConfig = {},
): number {
  return runOne<{ ap: number }>("ap_r40", {
    detections,
    ground_truth: groundTruth,
    class_id: classId,
    config,
  }).ap;
}

export function depthMetrics(
  pred: number[][],
  gt: number[][],
  cap = 80.0,
): DepthMetricsResult {
  return runOne<DepthMetricsResult>("depth_metrics", { pred, gt, cap });
}
