/**
 * Synthetic group-photo painter for tests: faces are filled skin-toned
 * ellipses with dark eyes and mouth on a dark noisy background. Bright
 * faces are found by the primary detector, dim ones only by the lenient
 * fallback pass.
 */

import * as fs from "fs";
import * as path from "path";

import { Image, encodeP6 } from "../src/ppm";
import { seededRng } from "../src/rng";

export interface FaceSpec {
  cx: number;
  cy: number;
  /** horizontal radius in pixels; the face is a 1.25x taller ellipse */
  r: number;
  /** 0..1; ~0.85 is found by the primary detector, ~0.5 fallback-only */
  brightness: number;
}

const SKIN = [0.95, 0.8, 0.7];

export function paintImage(
  width: number,
  height: number,
  faces: FaceSpec[],
  seed = "fixture"
): Image {
  const rng = seededRng("paint", seed, width, height);
  const data = new Float32Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    const bg = 0.08 + 0.03 * rng();
    data[3 * i] = bg;
    data[3 * i + 1] = bg;
    data[3 * i + 2] = bg * 1.1;
  }
  for (const face of faces) {
    const ry = face.r * 1.25;
    for (let y = Math.floor(face.cy - ry); y <= Math.ceil(face.cy + ry); y++) {
      for (let x = Math.floor(face.cx - face.r); x <= Math.ceil(face.cx + face.r); x++) {
        if (x < 0 || y < 0 || x >= width || y >= height) continue;
        const dx = (x - face.cx) / face.r;
        const dy = (y - face.cy) / ry;
        if (dx * dx + dy * dy > 1) continue;
        const k = (y * width + x) * 3;
        // eyes and mouth as dark patches inside the ellipse
        const isEye =
          Math.abs(dy + 0.3) < 0.12 && (Math.abs(dx - 0.35) < 0.15 || Math.abs(dx + 0.35) < 0.15);
        const isMouth = Math.abs(dy - 0.45) < 0.1 && Math.abs(dx) < 0.4;
        const shade = isEye || isMouth ? 0.25 : 1.0;
        data[k] = SKIN[0] * face.brightness * shade;
        data[k + 1] = SKIN[1] * face.brightness * shade;
        data[k + 2] = SKIN[2] * face.brightness * shade;
      }
    }
  }
  return { width, height, data };
}

export interface SampleImageSpec {
  name: string;
  faces: FaceSpec[];
}

/** Ten-image sample set: bright groups, dim-only images, and empty scenes. */
export function sampleSet(): SampleImageSpec[] {
  const bright = (cx: number, cy: number, r: number): FaceSpec => ({
    cx, cy, r, brightness: 0.85,
  });
  const dim = (cx: number, cy: number, r: number): FaceSpec => ({
    cx, cy, r, brightness: 0.5,
  });
  return [
    { name: "img00", faces: [bright(40, 40, 14), bright(110, 45, 16), bright(75, 85, 13)] },
    { name: "img01", faces: [bright(50, 60, 18)] },
    { name: "img02", faces: [bright(35, 35, 12), bright(85, 40, 13), bright(130, 38, 12), bright(60, 90, 14)] },
    { name: "img03", faces: [bright(45, 50, 15), bright(115, 70, 17)] },
    { name: "img04", faces: [bright(80, 55, 20), dim(30, 90, 12)] },
    { name: "img05", faces: [bright(60, 45, 13), bright(120, 80, 15)] },
    { name: "img06", faces: [dim(50, 50, 15), dim(110, 60, 14)] },
    { name: "img07", faces: [dim(80, 62, 18)] },
    { name: "img08", faces: [] },
    { name: "img09", faces: [] },
  ];
}

export function writeSampleImages(dir: string, width = 160, height = 120): SampleImageSpec[] {
  fs.mkdirSync(dir, { recursive: true });
  const specs = sampleSet();
  for (const spec of specs) {
    const image = paintImage(width, height, spec.faces, spec.name);
    fs.writeFileSync(path.join(dir, `${spec.name}.ppm`), encodeP6(image));
  }
  return specs;
}
