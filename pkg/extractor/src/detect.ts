/**
 * Face detection with cascade routing.
 *
 * Two detectors run per image: a strict primary pass and a lenient
 * fallback pass. Both box lists are kept; `selectDetections` applies the
 * routing rule (primary when it found anything, else fallback, else
 * nothing, which downstream routes to the full-image classifier).
 *
 * The built-in detector is a brightness blob finder tuned for the
 * synthetic fixture images used in tests. Real deployments plug in an
 * external detector command; see the README.
 */

import { Image, luma } from "./ppm";

export interface Box {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface DetectionBundle {
  primary: Box[];
  fallback: Box[];
}

export function selectDetections(bundle: DetectionBundle): Box[] {
  if (bundle.primary.length > 0) return bundle.primary;
  return bundle.fallback;
}

export interface BlobDetectorOptions {
  /** luma threshold a pixel must exceed to belong to a blob */
  threshold: number;
  minArea: number;
  /** acceptable bounding-box width/height ratio */
  minAspect: number;
  maxAspect: number;
  /** blob pixels / bbox area; rejects stringy noise */
  minFill: number;
}

export const PRIMARY_DETECTOR: BlobDetectorOptions = {
  threshold: 0.55,
  minArea: 120,
  minAspect: 0.4,
  maxAspect: 1.8,
  minFill: 0.35,
};

export const FALLBACK_DETECTOR: BlobDetectorOptions = {
  threshold: 0.3,
  minArea: 80,
  minAspect: 0.25,
  maxAspect: 2.5,
  minFill: 0.25,
};

export function blobDetect(image: Image, opts: BlobDetectorOptions): Box[] {
  const { width, height } = image;
  const visited = new Uint8Array(width * height);
  const boxes: Box[] = [];
  const stack: number[] = [];

  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const start = y * width + x;
      if (visited[start] || luma(image, x, y) < opts.threshold) continue;
      // flood fill one connected component
      let minX = x, maxX = x, minY = y, maxY = y, area = 0;
      stack.length = 0;
      stack.push(start);
      visited[start] = 1;
      while (stack.length > 0) {
        const p = stack.pop() as number;
        const px = p % width;
        const py = (p - px) / width;
        area++;
        if (px < minX) minX = px;
        if (px > maxX) maxX = px;
        if (py < minY) minY = py;
        if (py > maxY) maxY = py;
        const neighbors = [p - 1, p + 1, p - width, p + width];
        for (const q of neighbors) {
          if (q < 0 || q >= width * height) continue;
          const qx = q % width;
          if (Math.abs(qx - px) > 1) continue; // row wrap
          if (visited[q]) continue;
          if (luma(image, qx, (q - qx) / width) < opts.threshold) continue;
          visited[q] = 1;
          stack.push(q);
        }
      }
      const bw = maxX - minX + 1;
      const bh = maxY - minY + 1;
      const aspect = bw / bh;
      const fill = area / (bw * bh);
      if (
        area >= opts.minArea &&
        aspect >= opts.minAspect &&
        aspect <= opts.maxAspect &&
        fill >= opts.minFill
      ) {
        boxes.push({ x: minX, y: minY, width: bw, height: bh });
      }
    }
  }
  boxes.sort((a, b) => a.y - b.y || a.x - b.x);
  return boxes;
}

export function detectFaces(image: Image): DetectionBundle {
  return {
    primary: blobDetect(image, PRIMARY_DETECTOR),
    fallback: blobDetect(image, FALLBACK_DETECTOR),
  };
}
