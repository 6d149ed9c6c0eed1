/**
 * 68-point landmark estimation.
 *
 * The built-in estimator lays a fixed face template into the detection box
 * with a small content-seeded jitter: deterministic, fast, and good enough
 * to exercise every downstream contract (68 points, image coordinates,
 * normalized pairwise distances). A real regression-tree or CNN landmarker
 * can be wired in through the external command hook documented in the
 * README.
 */

import { Box } from "./detect";
import { Point, LANDMARK_COUNT } from "./geometry";
import { Image } from "./ppm";
import { normal, seededRng } from "./rng";

/** Neutral face template in a unit square (x right, y down). */
export function faceTemplate(): Point[] {
  const pts: Point[] = [];
  // jaw arc, 17 points ear-to-ear through the chin
  for (let i = 0; i < 17; i++) {
    const t = (Math.PI * i) / 16;
    pts.push([0.5 - 0.4 * Math.cos(t), 0.45 + 0.48 * Math.sin(t)]);
  }
  // eyebrows, 5 points each
  for (let i = 0; i < 5; i++) {
    pts.push([0.18 + (0.24 * i) / 4, 0.3 - 0.03 * Math.sin((Math.PI * i) / 4)]);
  }
  for (let i = 0; i < 5; i++) {
    pts.push([0.58 + (0.24 * i) / 4, 0.3 - 0.03 * Math.sin((Math.PI * i) / 4)]);
  }
  // nose bridge and base
  for (let i = 0; i < 4; i++) pts.push([0.5, 0.36 + (0.22 * i) / 3]);
  for (let i = 0; i < 5; i++) {
    pts.push([0.42 + (0.16 * i) / 4, 0.64 + 0.02 * Math.sin((Math.PI * i) / 4)]);
  }
  // eyes, 6 points each
  const eye = (cx: number): Point[] => [
    [cx - 0.06, 0.4],
    [cx - 0.03, 0.375],
    [cx + 0.03, 0.375],
    [cx + 0.06, 0.4],
    [cx + 0.03, 0.425],
    [cx - 0.03, 0.425],
  ];
  pts.push(...eye(0.3), ...eye(0.7));
  // outer lip, 12 points
  const outer: Point[] = [
    [0.36, 0.78],
    [0.4, 0.75], [0.45, 0.735], [0.5, 0.74], [0.55, 0.735], [0.6, 0.75],
    [0.64, 0.78],
    [0.6, 0.815], [0.55, 0.83], [0.5, 0.835], [0.45, 0.83], [0.4, 0.815],
  ];
  // inner lip, 8 points
  const inner: Point[] = [
    [0.38, 0.78],
    [0.44, 0.765], [0.5, 0.76], [0.56, 0.765],
    [0.62, 0.78],
    [0.56, 0.795], [0.5, 0.8], [0.44, 0.795],
  ];
  pts.push(...outer, ...inner);
  if (pts.length !== LANDMARK_COUNT) throw new Error("template is not 68 points");
  return pts;
}

export function estimateLandmarks(image: Image, box: Box, imageId: string): Point[] {
  if (
    box.x < 0 ||
    box.y < 0 ||
    box.x + box.width > image.width ||
    box.y + box.height > image.height
  ) {
    throw new Error(
      `box ${JSON.stringify(box)} lies outside the ${image.width}x${image.height} image`
    );
  }
  const rng = seededRng("landmarks", imageId, box.x, box.y, box.width, box.height);
  const jitter = 0.008 * Math.min(box.width, box.height);
  return faceTemplate().map(([ux, uy]) => [
    box.x + ux * box.width + jitter * normal(rng),
    box.y + uy * box.height + jitter * normal(rng),
  ]);
}
