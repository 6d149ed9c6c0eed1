/**
 * Deep-embedding export: for every face crop, four descriptors - the
 * 512-wide "avgpool" tap and the 4096-wide "fc7" tap, each computed under
 * the original RGB channel order and under the BGR permutation.
 *
 * Backends are pluggable. The default "projection" backend is a
 * deterministic random projection of pooled crop statistics: it has the
 * right shapes, reacts to channel permutation, and is a pure function of
 * the crop, which is everything the file contracts and tests need. The
 * "tfjs" backend slot is where a converted face-identification network
 * goes; without its weights it fails loudly with setup instructions.
 */

import { Box } from "./detect";
import { Image } from "./ppm";
import { mulberry32, normal } from "./rng";

export type Tap = "avgpool" | "fc7";
export type ChannelOrder = "rgb" | "bgr";

export const TAP_DIMS: Record<Tap, number> = { avgpool: 512, fc7: 4096 };
export const CROP_SIZE = 224;
const GRID = 16; // pooled statistics grid; 16x16 cells x 3 channels
const STATS_DIM = GRID * GRID * 3;

export interface EmbeddingBackend {
  name: string;
  embed(crop: Image, tap: Tap, order: ChannelOrder): Float64Array;
}

/** Bilinear crop-and-resize to the fixed input resolution. */
export function cropResize(image: Image, box: Box, size = CROP_SIZE): Image {
  const out = new Float32Array(size * size * 3);
  for (let oy = 0; oy < size; oy++) {
    const sy = box.y + ((oy + 0.5) / size) * box.height - 0.5;
    const y0 = Math.max(0, Math.min(image.height - 1, Math.floor(sy)));
    const y1 = Math.min(image.height - 1, y0 + 1);
    const fy = Math.max(0, Math.min(1, sy - y0));
    for (let ox = 0; ox < size; ox++) {
      const sx = box.x + ((ox + 0.5) / size) * box.width - 0.5;
      const x0 = Math.max(0, Math.min(image.width - 1, Math.floor(sx)));
      const x1 = Math.min(image.width - 1, x0 + 1);
      const fx = Math.max(0, Math.min(1, sx - x0));
      for (let c = 0; c < 3; c++) {
        const p00 = image.data[(y0 * image.width + x0) * 3 + c];
        const p01 = image.data[(y0 * image.width + x1) * 3 + c];
        const p10 = image.data[(y1 * image.width + x0) * 3 + c];
        const p11 = image.data[(y1 * image.width + x1) * 3 + c];
        const top = p00 + (p01 - p00) * fx;
        const bottom = p10 + (p11 - p10) * fx;
        out[(oy * size + ox) * 3 + c] = top + (bottom - top) * fy;
      }
    }
  }
  return { width: size, height: size, data: out };
}

/** Per-cell channel means over a GRID x GRID partition of the crop. */
function pooledStats(crop: Image, order: ChannelOrder): Float64Array {
  const stats = new Float64Array(STATS_DIM);
  const cell = crop.width / GRID;
  const channelMap = order === "rgb" ? [0, 1, 2] : [2, 1, 0];
  for (let gy = 0; gy < GRID; gy++) {
    for (let gx = 0; gx < GRID; gx++) {
      const x0 = Math.floor(gx * cell);
      const x1 = Math.floor((gx + 1) * cell);
      const y0 = Math.floor(gy * cell);
      const y1 = Math.floor((gy + 1) * cell);
      const sums = [0, 0, 0];
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) {
          const k = (y * crop.width + x) * 3;
          sums[0] += crop.data[k + channelMap[0]];
          sums[1] += crop.data[k + channelMap[1]];
          sums[2] += crop.data[k + channelMap[2]];
        }
      }
      const count = (x1 - x0) * (y1 - y0);
      const base = (gy * GRID + gx) * 3;
      stats[base] = sums[0] / count;
      stats[base + 1] = sums[1] / count;
      stats[base + 2] = sums[2] / count;
    }
  }
  return stats;
}

export function projectionBackend(): EmbeddingBackend {
  const weights = new Map<Tap, Float64Array>();

  function weightsFor(tap: Tap): Float64Array {
    let w = weights.get(tap);
    if (!w) {
      const dim = TAP_DIMS[tap];
      w = new Float64Array(dim * STATS_DIM);
      const rng = mulberry32(tap === "avgpool" ? 0x5eed0a11 : 0x5eedfc07);
      const scale = 1 / Math.sqrt(STATS_DIM);
      for (let i = 0; i < w.length; i++) w[i] = normal(rng) * scale;
      weights.set(tap, w);
    }
    return w;
  }

  return {
    name: "projection",
    embed(crop, tap, order) {
      if (crop.width !== CROP_SIZE || crop.height !== CROP_SIZE) {
        throw new Error(`expected a ${CROP_SIZE}x${CROP_SIZE} crop, got ${crop.width}x${crop.height}`);
      }
      const stats = pooledStats(crop, order);
      const w = weightsFor(tap);
      const dim = TAP_DIMS[tap];
      const out = new Float64Array(dim);
      for (let k = 0; k < dim; k++) {
        let acc = 0;
        const row = k * STATS_DIM;
        for (let j = 0; j < STATS_DIM; j++) acc += w[row + j] * stats[j];
        out[k] = Math.tanh(4 * acc);
      }
      return out;
    },
  };
}

export function tfjsBackend(modelPath: string | undefined): EmbeddingBackend {
  throw new Error(
    "tfjs embedding backend is not configured: convert the face-identification " +
      "network with tensorflowjs_converter, place model.json next to its weight " +
      `shards, and pass the directory via --embed-model (got ${JSON.stringify(modelPath)})`
  );
}

export function makeEmbeddingBackend(kind: string, modelPath?: string): EmbeddingBackend {
  if (kind === "projection") return projectionBackend();
  if (kind === "tfjs") return tfjsBackend(modelPath);
  throw new Error(`unknown embedding backend ${JSON.stringify(kind)}`);
}
