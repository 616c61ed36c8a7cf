/**
 * Parity suite: every wrapped function must return exactly what the native
 * library returns for the same inputs.
 *
 * Each case batch goes through two independent paths:
 *   wrapper  : runRequests -> `python -m mono3d.cli api`
 *   reference: scripts/native_reference.py, which imports the library and
 *              calls the functions directly.
 * Results are compared with strict deep equality, so any float that fails
 * to survive the JSON boundary bit-exactly fails the suite.
 */

import { spawnSync } from "node:child_process";
import { resolve } from "node:path";
import { describe, expect, test } from "vitest";

import {
  apR40,
  confidenceTarget,
  decodeDetections,
  denseDepthLoss,
  depthMetrics,
  disentangledL3d,
  nms2d,
  runRequests,
} from "../src/index";
import type { ApiRequest } from "../src/types";
import {
  mulberry32,
  randomComponentsPair,
  randomDetection,
  randomGroundTruth,
  randomHeadLevel,
  randomIntrinsics,
  sparseDepthGrid,
  uniform,
} from "./random";

const PYTHON = process.env.MONO3D_PYTHON ?? "python3";
const REFERENCE = resolve(__dirname, "..", "scripts", "native_reference.py");
const CASES = 100;

function referenceResults(requests: ApiRequest[]): unknown[] {
  const proc = spawnSync(PYTHON, [REFERENCE], {
    input: JSON.stringify({ requests }),
    encoding: "utf8",
    maxBuffer: 512 * 1024 * 1024,
  });
  if (proc.status !== 0) {
    throw new Error(proc.stderr);
  }
  return (JSON.parse(proc.stdout) as { results: unknown[] }).results;
}

function expectParity(requests: ApiRequest[]): unknown[] {
  const viaWrapper = runRequests(requests);
  const viaNative = referenceResults(requests);
  expect(viaWrapper).toStrictEqual(viaNative);
  return viaWrapper;
}

describe("bit-exact parity with native calls", () => {
  test("confidence_target x100", () => {
    const rng = mulberry32(1);
    const requests: ApiRequest[] = Array.from({ length: CASES }, () => ({
      op: "confidence_target",
      args: { l3d_total: uniform(rng, 0, 8), temperature: uniform(rng, 0.1, 4) },
    }));
    expectParity(requests);
  });

  test("disentangled_l3d x100", () => {
    const rng = mulberry32(2);
    const requests: ApiRequest[] = Array.from({ length: CASES }, () => {
      const intrinsics = randomIntrinsics(rng);
      const { gtBox, gt, pred } = randomComponentsPair(rng, intrinsics);
      return { op: "disentangled_l3d", args: { pred, gt_box: gtBox, gt, intrinsics } };
    });
    expectParity(requests);
  });

  test("dense_depth_loss x100", () => {
    const rng = mulberry32(3);
    const requests: ApiRequest[] = Array.from({ length: CASES }, () => {
      const h = 3 + Math.floor(uniform(rng, 0, 5));
      const w = 3 + Math.floor(uniform(rng, 0, 6));
      const gt = sparseDepthGrid(rng, h, w);
      gt[0][0] = 5.0; // keep at least one valid pixel
      const levels = 1 + Math.floor(uniform(rng, 0, 3));
      const predMaps = Array.from({ length: levels }, () =>
        sparseDepthGrid(rng, h, w).map((row) => row.map((v) => v + 0.5)),
      );
      return { op: "dense_depth_loss", args: { pred_maps: predMaps, gt } };
    });
    expectParity(requests);
  });

  test("nms_2d x100", () => {
    const rng = mulberry32(4);
    const requests: ApiRequest[] = Array.from({ length: CASES }, () => ({
      op: "nms_2d",
      args: {
        detections: Array.from({ length: 10 }, () => randomDetection(rng)),
        iou_threshold: uniform(rng, 0.1, 0.9),
      },
    }));
    expectParity(requests);
  });

  test("depth_metrics x100", () => {
    const rng = mulberry32(5);
    const requests: ApiRequest[] = Array.from({ length: CASES }, () => {
      const h = 4 + Math.floor(uniform(rng, 0, 4));
      const w = 4 + Math.floor(uniform(rng, 0, 4));
      const gt = sparseDepthGrid(rng, h, w);
      gt[1][1] = 10.0;
      const pred = gt.map((row) => row.map((v) => v + uniform(rng, -0.5, 0.5)));
      return { op: "depth_metrics", args: { pred, gt, cap: 80.0 } };
    });
    expectParity(requests);
  });

  test("ap_r40 x100", () => {
    const rng = mulberry32(6);
    const requests: ApiRequest[] = Array.from({ length: CASES }, () => {
      const images: Record<string, unknown[]> = {};
      const gts: Record<string, unknown[]> = {};
      for (let i = 0; i < 2; i++) {
        const key = `img${i}`;
        const gtBoxes = Array.from({ length: 1 + Math.floor(uniform(rng, 0, 3)) }, () =>
          randomGroundTruth(rng),
        );
        gts[key] = gtBoxes;
        images[key] = gtBoxes
          .filter(() => rng() < 0.8)
          .map((g) => ({
            class: g.class,
            score: uniform(rng, 0.1, 1),
            box2d: g.box2d,
            center: [
              g.center[0] + uniform(rng, -0.4, 0.4),
              g.center[1],
              g.center[2] + uniform(rng, -0.4, 0.4),
            ],
            size: g.size,
            quaternion: g.quaternion,
            camera_id: null,
          }))
          .concat(rng() < 0.5 ? [randomDetection(rng)] : []);
      }
      return {
        op: "ap_r40",
        args: {
          detections: images,
          ground_truth: gts,
          class_id: 0,
          config: { match_metric: "iou_3d", default_iou_threshold: 0.3 },
        },
      };
    });
    expectParity(requests);
  });

  test("decode_detections x100", () => {
    const rng = mulberry32(7);
    const requests: ApiRequest[] = Array.from({ length: CASES }, () => ({
      op: "decode_detections",
      args: {
        levels: [randomHeadLevel(rng, 3, 4, 8), randomHeadLevel(rng, 2, 2, 16)],
        intrinsics: randomIntrinsics(rng),
        params: {
          sigma: [uniform(rng, 5, 20), uniform(rng, 10, 40)],
          mu: [uniform(rng, 10, 30), uniform(rng, 20, 60)],
          alpha: [8, 16],
          c: 1 / 500,
        },
        canonical_sizes: { "0": [1.8, 1.6, 4.2], "1": [0.6, 1.8, 0.6] },
        score_floor: 0.05,
      },
    }));
    expectParity(requests);
  });
});

describe("wrapper semantics", () => {
  test("disentangled loss is zero at the ground truth", () => {
    const rng = mulberry32(8);
    const intrinsics = randomIntrinsics(rng);
    const { gtBox, gt } = randomComponentsPair(rng, intrinsics);
    const loss = disentangledL3d(gt, gtBox, gt, intrinsics);
    expect(loss.total).toBeLessThanOrEqual(1e-9);
  });

  test("confidence target hits e^-1 at the temperature", () => {
    expect(confidenceTarget(2.0, 2.0)).toBeCloseTo(Math.exp(-1), 12);
    expect(confidenceTarget(0.0)).toBe(1.0);
  });

  test("empty detection list round-trips as empty", () => {
    expect(nms2d([], 0.5)).toStrictEqual([]);
  });

  test("nms keeps the higher-scoring duplicate", () => {
    const rng = mulberry32(9);
    const a = randomDetection(rng);
    const b = { ...a, score: a.score / 2 };
    const kept = nms2d([b, a], 0.5);
    expect(kept).toStrictEqual([a]);
  });

  test("perfect detections give AP 1", () => {
    const rng = mulberry32(10);
    const gts = { a: [randomGroundTruth(rng), randomGroundTruth(rng)] };
    const dets = {
      a: gts.a.map((g) => ({
        class: g.class,
        score: 1.0,
        box2d: g.box2d,
        center: g.center,
        size: g.size,
        quaternion: g.quaternion,
        camera_id: null,
      })),
    };
    expect(apR40(dets, gts, 0)).toBe(1.0);
  });

  test("depth metrics on a perfect prediction", () => {
    const rng = mulberry32(11);
    const gt = sparseDepthGrid(rng, 5, 5);
    gt[2][2] = 12.0;
    const m = depthMetrics(gt, gt);
    expect(m.abs_rel).toBe(0.0);
    expect(m.delta1).toBe(1.0);
  });

  test("dense depth loss on equal maps is exactly zero", () => {
    const rng = mulberry32(12);
    const gt = sparseDepthGrid(rng, 4, 4);
    gt[0][0] = 3.0;
    expect(denseDepthLoss([gt, gt], gt)).toBe(0.0);
  });

  test("decode on an all-background grid is empty", () => {
    const level = randomHeadLevel(mulberry32(13), 2, 2, 8);
    level.class_logits = level.class_logits.map((row) =>
      row.map((cell) => cell.map(() => -1e30)),
    );
    const dets = decodeDetections({
      levels: [level],
      intrinsics: { fx: 500, fy: 500, px: 320, py: 240 },
      params: { sigma: [10], mu: [20], alpha: [8], c: 1 / 500 },
      canonical_sizes: { "0": [1.8, 1.6, 4.2], "1": [0.6, 1.8, 0.6] },
      score_floor: 0.0,
    });
    expect(dets).toStrictEqual([]);
  });
});
