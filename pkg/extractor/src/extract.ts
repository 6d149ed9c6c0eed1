/**
 * Batch extraction: images in, canonical feature/score/manifest files out.
 *
 * Per image: run both detectors, apply cascade routing, and for every
 * selected face estimate landmarks, crop to 224x224, and compute the four
 * embedding variants plus the normalized landmark-distance row. A face
 * whose landmark estimation fails is dropped from ALL modality files so
 * per-image face counts stay identical across the five outputs.
 */

import * as fs from "fs";
import * as path from "path";

import { Box, detectFaces, selectDetections, DetectionBundle } from "./detect";
import { CROP_SIZE, EmbeddingBackend, cropResize } from "./embed";
import {
  FACE_MODALITIES,
  LABEL_NAMES,
  LabelName,
  ManifestEntry,
  featureFileText,
  manifestText,
  scoreFileText,
} from "./formats";
import { landmarkFeatureRow } from "./geometry";
import { estimateLandmarks } from "./landmarks";
import { decodePnm, Image } from "./ppm";
import { Scorer } from "./score";

export interface ExtractOptions {
  imagesDir: string;
  outDir: string;
  split: "train" | "validation" | "test";
  embedBackend: EmbeddingBackend;
  /** null = omit score files entirely */
  scorer: Scorer | null;
  /** image id -> label, required for train/validation splits */
  labels?: Map<string, LabelName>;
  cropSize?: number;
  log?: (message: string) => void;
}

export interface ImageReport {
  imageId: string;
  primaryDetections: number;
  fallbackDetections: number;
  facesEmitted: number;
  facesDropped: number;
}

export interface ExtractSummary {
  manifestPath: string;
  images: ImageReport[];
  undecodable: string[];
}

const IMAGE_EXTENSIONS = new Set([".ppm", ".pgm", ".pnm"]);

export function listImages(imagesDir: string): string[] {
  return fs
    .readdirSync(imagesDir)
    .filter((name) => IMAGE_EXTENSIONS.has(path.extname(name).toLowerCase()))
    .sort();
}

function faceRows(
  image: Image,
  imageId: string,
  boxes: Box[],
  backend: EmbeddingBackend,
  cropSize: number,
  log: (message: string) => void
): { rows: Record<string, Float64Array[]>; dropped: number } {
  const rows: Record<string, Float64Array[]> = {};
  for (const modality of FACE_MODALITIES) rows[modality] = [];
  let dropped = 0;
  for (const box of boxes) {
    let landmarksRow: Float64Array;
    try {
      landmarksRow = landmarkFeatureRow(estimateLandmarks(image, box, imageId));
    } catch (err) {
      dropped++;
      log(`${imageId}: dropping face at (${box.x},${box.y}): ${(err as Error).message}`);
      continue;
    }
    const crop = cropResize(image, box, cropSize);
    rows.avgpool_rgb.push(backend.embed(crop, "avgpool", "rgb"));
    rows.avgpool_bgr.push(backend.embed(crop, "avgpool", "bgr"));
    rows.fc7_rgb.push(backend.embed(crop, "fc7", "rgb"));
    rows.fc7_bgr.push(backend.embed(crop, "fc7", "bgr"));
    rows.landmarks.push(landmarksRow);
  }
  return { rows, dropped };
}

export function extractImage(
  image: Image,
  imageId: string,
  opts: ExtractOptions
): { bundle: DetectionBundle; entry: ManifestEntry; report: ImageReport } {
  const log = opts.log ?? (() => undefined);
  const bundle = detectFaces(image);
  const selected = selectDetections(bundle);
  const { rows, dropped } = faceRows(
    image, imageId, selected, opts.embedBackend, opts.cropSize ?? CROP_SIZE, log
  );

  const featuresDir = path.join(opts.outDir, "features");
  const scoresDir = path.join(opts.outDir, "scores");
  fs.mkdirSync(featuresDir, { recursive: true });

  const entry: ManifestEntry = { imageId, features: {} };
  for (const modality of FACE_MODALITIES) {
    const rel = path.posix.join("features", `${imageId}.${modality}.feat`);
    fs.writeFileSync(path.join(opts.outDir, rel), featureFileText(modality, rows[modality]));
    entry.features[modality] = rel;
  }
  if (opts.scorer) {
    fs.mkdirSync(scoresDir, { recursive: true });
    const rel = path.posix.join("scores", `${imageId}.score`);
    fs.writeFileSync(path.join(opts.outDir, rel), scoreFileText(opts.scorer(image, imageId)));
    entry.fullimage = rel;
  }
  const label = opts.labels?.get(imageId);
  if (label) entry.label = label;

  return {
    bundle,
    entry,
    report: {
      imageId,
      primaryDetections: bundle.primary.length,
      fallbackDetections: bundle.fallback.length,
      facesEmitted: rows.landmarks.length,
      facesDropped: dropped,
    },
  };
}

export function extractDataset(opts: ExtractOptions): ExtractSummary {
  const log = opts.log ?? (() => undefined);
  const names = listImages(opts.imagesDir);
  if (names.length === 0) {
    throw new Error(`no .ppm/.pgm/.pnm images found under ${opts.imagesDir}`);
  }
  fs.mkdirSync(opts.outDir, { recursive: true });

  const entries: ManifestEntry[] = [];
  const reports: ImageReport[] = [];
  const undecodable: string[] = [];
  const detections: Record<string, DetectionBundle> = {};

  for (const name of names) {
    const imageId = name.slice(0, name.length - path.extname(name).length);
    let image: Image;
    try {
      image = decodePnm(fs.readFileSync(path.join(opts.imagesDir, name)));
    } catch (err) {
      undecodable.push(name);
      log(`skipping undecodable image ${name}: ${(err as Error).message}`);
      continue;
    }
    if ((opts.split === "train" || opts.split === "validation") && !opts.labels?.get(imageId)) {
      throw new Error(`${opts.split} split requires a label for ${imageId}`);
    }
    const { bundle, entry, report } = extractImage(image, imageId, opts);
    detections[imageId] = bundle;
    entries.push(entry);
    reports.push(report);
  }

  const manifestPath = path.join(opts.outDir, `${opts.split}.manifest`);
  fs.writeFileSync(manifestPath, manifestText(opts.split, entries));
  // insertion order is already sorted because image names are
  fs.writeFileSync(
    path.join(opts.outDir, "detections.json"),
    JSON.stringify(detections, null, 2) + "\n"
  );
  return { manifestPath, images: reports, undecodable };
}

export function parseLabelsFile(labelsPath: string): Map<string, LabelName> {
  const labels = new Map<string, LabelName>();
  const text = fs.readFileSync(labelsPath, "ascii");
  text.split("\n").forEach((line, index) => {
    const trimmed = line.trim();
    if (!trimmed || trimmed.startsWith("#")) return;
    const parts = trimmed.split(/\s+/);
    if (parts.length !== 2 || !(LABEL_NAMES as readonly string[]).includes(parts[1])) {
      throw new Error(
        `${labelsPath}:${index + 1}: expected '<image_id> <${LABEL_NAMES.join("|")}>'`
      );
    }
    labels.set(parts[0], parts[1] as LabelName);
  });
  return labels;
}
