import { describe, expect, it } from "vitest";

import { detectFaces, selectDetections } from "../src/detect";
import { estimateLandmarks } from "../src/landmarks";
import { paintImage } from "./fixtures";

describe("cascade routing", () => {
  it("uses primary detections when present", () => {
    const primary = [{ x: 1, y: 1, width: 5, height: 5 }];
    const fallback = [{ x: 9, y: 9, width: 4, height: 4 }];
    expect(selectDetections({ primary, fallback })).toBe(primary);
  });

  it("falls back when the primary detector found nothing", () => {
    const fallback = [{ x: 9, y: 9, width: 4, height: 4 }];
    expect(selectDetections({ primary: [], fallback })).toBe(fallback);
  });

  it("returns nothing when both detectors are empty", () => {
    expect(selectDetections({ primary: [], fallback: [] })).toEqual([]);
  });
});

describe("blob detector", () => {
  it("finds bright faces with the primary pass", () => {
    const image = paintImage(160, 120, [
      { cx: 40, cy: 40, r: 14, brightness: 0.85 },
      { cx: 110, cy: 70, r: 16, brightness: 0.85 },
    ]);
    const bundle = detectFaces(image);
    expect(bundle.primary.length).toBe(2);
    expect(bundle.fallback.length).toBe(2);
  });

  it("finds dim faces only with the fallback pass", () => {
    const image = paintImage(160, 120, [{ cx: 70, cy: 60, r: 16, brightness: 0.5 }]);
    const bundle = detectFaces(image);
    expect(bundle.primary.length).toBe(0);
    expect(bundle.fallback.length).toBe(1);
  });

  it("finds nothing in an empty scene", () => {
    const image = paintImage(160, 120, []);
    const bundle = detectFaces(image);
    expect(bundle.primary.length).toBe(0);
    expect(bundle.fallback.length).toBe(0);
  });

  it("boxes cover the painted faces", () => {
    const image = paintImage(160, 120, [{ cx: 80, cy: 60, r: 15, brightness: 0.85 }]);
    const [box] = detectFaces(image).primary;
    expect(box.x).toBeLessThanOrEqual(80 - 10);
    expect(box.x + box.width).toBeGreaterThanOrEqual(80 + 10);
    expect(box.y).toBeLessThanOrEqual(60 - 12);
    expect(box.y + box.height).toBeGreaterThanOrEqual(60 + 12);
  });
});

describe("landmark estimation", () => {
  it("emits 68 in-image points inside the box region", () => {
    const image = paintImage(160, 120, [{ cx: 80, cy: 60, r: 15, brightness: 0.85 }]);
    const [box] = detectFaces(image).primary;
    const points = estimateLandmarks(image, box, "img");
    expect(points.length).toBe(68);
    for (const [x, y] of points) {
      expect(x).toBeGreaterThanOrEqual(box.x - 3);
      expect(x).toBeLessThanOrEqual(box.x + box.width + 3);
      expect(y).toBeGreaterThanOrEqual(box.y - 3);
      expect(y).toBeLessThanOrEqual(box.y + box.height + 3);
    }
  });

  it("is deterministic for the same image and box", () => {
    const image = paintImage(160, 120, [{ cx: 80, cy: 60, r: 15, brightness: 0.85 }]);
    const [box] = detectFaces(image).primary;
    expect(estimateLandmarks(image, box, "img")).toEqual(estimateLandmarks(image, box, "img"));
  });

  it("rejects out-of-bounds boxes", () => {
    const image = paintImage(60, 60, []);
    expect(() =>
      estimateLandmarks(image, { x: 50, y: 10, width: 20, height: 20 }, "img")
    ).toThrow(/outside/);
  });
});
