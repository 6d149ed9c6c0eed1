/**
 * Minimal PNM (PPM/PGM) image IO.
 *
 * Supports P2/P5 grayscale and P3/P6 RGB, ASCII or binary, 8-bit or 16-bit
 * maxval. Pixels are stored as RGB float triples in [0, 1] so the rest of
 * the pipeline never cares about the source encoding.
 */

export interface Image {
  width: number;
  height: number;
  /** RGB interleaved, length = width * height * 3, values in [0, 1] */
  data: Float32Array;
}

class HeaderReader {
  private pos = 0;
  constructor(private buf: Buffer) {}

  /** Next whitespace-delimited token, skipping '#' comments. */
  nextToken(): string {
    let tok = "";
    while (this.pos < this.buf.length) {
      const ch = this.buf[this.pos];
      if (ch === 0x23) {
        // comment runs to end of line
        while (this.pos < this.buf.length && this.buf[this.pos] !== 0x0a) this.pos++;
        continue;
      }
      if (ch === 0x20 || ch === 0x09 || ch === 0x0a || ch === 0x0d) {
        if (tok) return tok;
        this.pos++;
        continue;
      }
      tok += String.fromCharCode(ch);
      this.pos++;
    }
    if (!tok) throw new Error("unexpected end of PNM header");
    return tok;
  }

  nextInt(): number {
    const tok = this.nextToken();
    const value = Number(tok);
    if (!Number.isInteger(value) || value < 0) {
      throw new Error(`bad integer ${JSON.stringify(tok)} in PNM header`);
    }
    return value;
  }

  /** Position of binary pixel data: one whitespace byte past the header. */
  binaryStart(): number {
    return this.pos + 1;
  }

  restTokens(): string[] {
    const out: string[] = [];
    while (true) {
      try {
        out.push(this.nextToken());
      } catch {
        return out;
      }
    }
  }
}

export function decodePnm(buf: Buffer): Image {
  const reader = new HeaderReader(buf);
  const magic = reader.nextToken();
  if (!["P2", "P3", "P5", "P6"].includes(magic)) {
    throw new Error(`unsupported PNM magic ${JSON.stringify(magic)}`);
  }
  const width = reader.nextInt();
  const height = reader.nextInt();
  const maxval = reader.nextInt();
  if (width === 0 || height === 0) throw new Error("empty PNM image");
  if (maxval === 0 || maxval > 65535) throw new Error(`bad maxval ${maxval}`);

  const channels = magic === "P3" || magic === "P6" ? 3 : 1;
  const count = width * height * channels;
  const raw = new Float32Array(count);

  if (magic === "P2" || magic === "P3") {
    const tokens = reader.restTokens();
    if (tokens.length < count) {
      throw new Error(`PNM body has ${tokens.length} samples, expected ${count}`);
    }
    for (let i = 0; i < count; i++) {
      const v = Number(tokens[i]);
      if (!Number.isInteger(v) || v < 0 || v > maxval) {
        throw new Error(`bad sample ${JSON.stringify(tokens[i])} at index ${i}`);
      }
      raw[i] = v / maxval;
    }
  } else {
    const start = reader.binaryStart();
    const wide = maxval > 255;
    const need = count * (wide ? 2 : 1);
    if (buf.length - start < need) {
      throw new Error(`PNM body truncated: ${buf.length - start} bytes, expected ${need}`);
    }
    for (let i = 0; i < count; i++) {
      const v = wide ? buf.readUInt16BE(start + 2 * i) : buf[start + i];
      raw[i] = v / maxval;
    }
  }

  const data = new Float32Array(width * height * 3);
  if (channels === 3) {
    data.set(raw);
  } else {
    for (let i = 0; i < width * height; i++) {
      data[3 * i] = data[3 * i + 1] = data[3 * i + 2] = raw[i];
    }
  }
  return { width, height, data };
}

export function encodeP6(image: Image): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  const body = Buffer.alloc(image.width * image.height * 3);
  for (let i = 0; i < body.length; i++) {
    const v = Math.max(0, Math.min(1, image.data[i]));
    body[i] = Math.round(v * 255);
  }
  return Buffer.concat([header, body]);
}

export function luma(image: Image, x: number, y: number): number {
  const k = (y * image.width + x) * 3;
  return 0.299 * image.data[k] + 0.587 * image.data[k + 1] + 0.114 * image.data[k + 2];
}
