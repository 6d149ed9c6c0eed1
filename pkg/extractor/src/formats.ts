/**
 * Writers for the canonical gaffect v1 text formats. The grammars are
 * fixed by the downstream pipeline; every file this module emits must
 * parse there with zero errors.
 */

export const MODALITY_DIMS: Record<string, number> = {
  avgpool_rgb: 512,
  avgpool_bgr: 512,
  fc7_rgb: 4096,
  fc7_bgr: 4096,
  landmarks: 2278,
};

export const FACE_MODALITIES = Object.keys(MODALITY_DIMS);

export const LABEL_NAMES = ["Positive", "Neutral", "Negative"] as const;
export type LabelName = (typeof LABEL_NAMES)[number];

function formatValue(v: number): string {
  if (!Number.isFinite(v)) throw new Error(`non-finite feature value ${v}`);
  // Number#toString is the shortest decimal that round-trips the double
  return v.toString();
}

export function featureFileText(modality: string, rows: ArrayLike<number>[]): string {
  const dim = MODALITY_DIMS[modality];
  if (dim === undefined) throw new Error(`unknown modality ${JSON.stringify(modality)}`);
  const lines = [`gaffect-features v1 modality=${modality} dim=${dim}`];
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`${modality} row has ${row.length} values, expected ${dim}`);
    }
    lines.push(Array.from(row, formatValue).join(" "));
  }
  return lines.join("\n") + "\n";
}

export function scoreFileText(score: ArrayLike<number>): string {
  if (score.length !== 3) throw new Error(`score must have 3 entries, got ${score.length}`);
  let total = 0;
  for (let i = 0; i < 3; i++) total += score[i];
  if (Math.abs(total - 1) > 1e-6) throw new Error(`score sums to ${total}, expected 1`);
  return `gaffect-score v1 classes=3\n${Array.from(score, formatValue).join(" ")}\n`;
}

export interface ManifestEntry {
  imageId: string;
  label?: LabelName;
  /** modality -> path relative to the manifest */
  features: Record<string, string>;
  fullimage?: string;
}

export function manifestText(split: string, entries: ManifestEntry[]): string {
  const lines = ["gaffect-manifest v1", `split ${split}`];
  for (const entry of entries) {
    if (/\s/.test(entry.imageId)) {
      throw new Error(`image id may not contain whitespace: ${JSON.stringify(entry.imageId)}`);
    }
    lines.push(`image ${entry.imageId}`);
    if (entry.label) lines.push(`label ${entry.label}`);
    for (const modality of FACE_MODALITIES) {
      const rel = entry.features[modality];
      if (rel) lines.push(`feature ${modality} ${rel}`);
    }
    if (entry.fullimage) lines.push(`fullimage ${entry.fullimage}`);
  }
  return lines.join("\n") + "\n";
}
