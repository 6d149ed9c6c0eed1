/**
 * Landmark geometry features: the 2278 unique pairwise distances between
 * 68 points, divided by the largest distance. Pair order is lexicographic
 * over (i, j) with i < j, matching the downstream file consumers.
 */

export const LANDMARK_COUNT = 68;
export const PAIR_COUNT = (LANDMARK_COUNT * (LANDMARK_COUNT - 1)) / 2;

export type Point = [number, number];

export function pairwiseDistances(points: Point[]): Float64Array {
  const n = points.length;
  if (n < 2) throw new Error(`need at least 2 points, got ${n}`);
  const out = new Float64Array((n * (n - 1)) / 2);
  let k = 0;
  for (let i = 0; i < n; i++) {
    const [xi, yi] = points[i];
    if (!Number.isFinite(xi) || !Number.isFinite(yi)) {
      throw new Error(`non-finite landmark at index ${i}`);
    }
    for (let j = i + 1; j < n; j++) {
      out[k++] = Math.hypot(xi - points[j][0], yi - points[j][1]);
    }
  }
  return out;
}

export function normalizeByMax(distances: Float64Array): Float64Array {
  let max = 0;
  for (const d of distances) {
    if (d < 0 || !Number.isFinite(d)) throw new Error("distances must be finite and >= 0");
    if (d > max) max = d;
  }
  if (max === 0) throw new Error("degenerate geometry: all landmarks coincide");
  const out = new Float64Array(distances.length);
  for (let i = 0; i < distances.length; i++) out[i] = distances[i] / max;
  return out;
}

export function landmarkFeatureRow(points: Point[]): Float64Array {
  if (points.length !== LANDMARK_COUNT) {
    throw new Error(`expected ${LANDMARK_COUNT} landmarks, got ${points.length}`);
  }
  return normalizeByMax(pairwiseDistances(points));
}
