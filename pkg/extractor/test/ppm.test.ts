import { describe, expect, it } from "vitest";

import { decodePnm, encodeP6, luma, Image } from "../src/ppm";

function gradient(width: number, height: number): Image {
  const data = new Float32Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const k = (y * width + x) * 3;
      data[k] = x / (width - 1);
      data[k + 1] = y / (height - 1);
      data[k + 2] = 0.5;
    }
  }
  return { width, height, data };
}

describe("pnm decode", () => {
  it("round-trips through P6", () => {
    const image = gradient(9, 7);
    const decoded = decodePnm(encodeP6(image));
    expect(decoded.width).toBe(9);
    expect(decoded.height).toBe(7);
    for (let i = 0; i < image.data.length; i++) {
      expect(Math.abs(decoded.data[i] - image.data[i])).toBeLessThan(1 / 255 + 1e-6);
    }
  });

  it("parses ASCII P3 with comments", () => {
    const text = "P3\n# a comment\n2 1\n255\n255 0 0   0 128 255\n";
    const image = decodePnm(Buffer.from(text, "ascii"));
    expect(image.width).toBe(2);
    expect(image.data[0]).toBeCloseTo(1.0, 6);
    expect(image.data[4]).toBeCloseTo(128 / 255, 6);
    expect(image.data[5]).toBeCloseTo(1.0, 6);
  });

  it("expands P2 grayscale to RGB", () => {
    const image = decodePnm(Buffer.from("P2\n2 2\n100\n0 50 100 25\n", "ascii"));
    expect(image.data[3]).toBeCloseTo(0.5, 6);
    expect(image.data[4]).toBeCloseTo(0.5, 6);
    expect(image.data[5]).toBeCloseTo(0.5, 6);
  });

  it("rejects truncated binary bodies", () => {
    const truncated = Buffer.from("P6\n4 4\n255\nabc", "ascii");
    expect(() => decodePnm(truncated)).toThrow(/truncated/);
  });

  it("rejects unknown magics", () => {
    expect(() => decodePnm(Buffer.from("P7\n1 1\n255\n0", "ascii"))).toThrow(/magic/);
  });

  it("computes luma", () => {
    const image = decodePnm(Buffer.from("P3\n1 1\n255\n255 255 255\n", "ascii"));
    expect(luma(image, 0, 0)).toBeCloseTo(1.0, 6);
  });
});
