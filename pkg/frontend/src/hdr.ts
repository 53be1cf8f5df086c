// Radiance RGBE (.hdr) decoder for 32-bit_rle_rgbe images in the standard
// "-Y H +X W" orientation.  Scanlines may be flat quads or new-style
// run-length encoded (per-channel runs/literals).  A texel with exponent
// byte e > 0 decodes each channel as byte * 2^(e - 136); e == 0 is black.

import { ViewerError } from "./errors.js";
import { MAX_DIM } from "./pfm.js";

export interface HdrImage {
  width: number;
  height: number;
  /** Row-major RGB, top row first, length width * height * 3. */
  data: Float64Array;
}

function lineToString(bytes: Uint8Array, start: number, end: number): string {
  let s = "";
  for (let i = start; i < end; i++) s += String.fromCharCode(bytes[i]);
  return s;
}

function findNewline(bytes: Uint8Array, from: number): number {
  for (let i = from; i < bytes.length; i++) {
    if (bytes[i] === 0x0a) return i;
  }
  return -1;
}

export function decodeHdr(raw: ArrayBuffer): HdrImage {
  const bytes = new Uint8Array(raw);
  if (bytes.length < 2 || bytes[0] !== 0x23 || bytes[1] !== 0x3f) {
    throw new ViewerError("format", "missing Radiance magic '#?'");
  }

  let pos = 0;
  let fmtSeen: string | null = null;
  for (;;) {
    const nl = findNewline(bytes, pos);
    if (nl < 0) {
      throw new ViewerError("format", "unterminated Radiance header");
    }
    const line = lineToString(bytes, pos, nl);
    pos = nl + 1;
    if (line.startsWith("FORMAT=")) {
      fmtSeen = line.slice("FORMAT=".length).trim();
    }
    if (line === "") break;
  }
  if (fmtSeen === null) {
    throw new ViewerError("format", "Radiance header missing FORMAT line");
  }
  if (fmtSeen !== "32-bit_rle_rgbe") {
    throw new ViewerError("format", `unsupported Radiance format ${JSON.stringify(fmtSeen)}`);
  }

  const nl = findNewline(bytes, pos);
  if (nl < 0) {
    throw new ViewerError("format", "missing Radiance resolution line");
  }
  const res = lineToString(bytes, pos, nl).split(/\s+/).filter((t) => t.length > 0);
  pos = nl + 1;
  if (res.length !== 4 || res[0] !== "-Y" || res[2] !== "+X") {
    throw new ViewerError("format", `unsupported orientation ${JSON.stringify(res.join(" "))}`);
  }
  if (!/^[+-]?\d+$/.test(res[1]) || !/^[+-]?\d+$/.test(res[3])) {
    throw new ViewerError("format", "malformed Radiance resolution");
  }
  const height = Number(res[1]);
  const width = Number(res[3]);
  if (height <= 0 || width <= 0 || height > MAX_DIM || width > MAX_DIM) {
    throw new ViewerError("format", `unreasonable HDR dimensions ${width}x${height}`);
  }

  const rgbe = new Uint8Array(width * 4); // one scanline, channel-interleaved
  const data = new Float64Array(width * height * 3);
  for (let r = 0; r < height; r++) {
    pos = decodeScanline(bytes, pos, rgbe, width);
    const rowBase = r * width * 3;
    for (let c = 0; c < width; c++) {
      const e = rgbe[c * 4 + 3];
      const scale = e > 0 ? Math.pow(2, e - 136) : 0;
      data[rowBase + c * 3] = rgbe[c * 4] * scale;
      data[rowBase + c * 3 + 1] = rgbe[c * 4 + 1] * scale;
      data[rowBase + c * 3 + 2] = rgbe[c * 4 + 2] * scale;
    }
  }
  return { width, height, data };
}

function decodeScanline(bytes: Uint8Array, pos: number, dest: Uint8Array, width: number): number {
  if (bytes.length - pos < 4) {
    throw new ViewerError("format", "HDR scanline truncated");
  }
  const isRle =
    bytes[pos] === 2 &&
    bytes[pos + 1] === 2 &&
    ((bytes[pos + 2] << 8) | bytes[pos + 3]) === width &&
    width >= 8;

  if (isRle) {
    pos += 4;
    for (let ch = 0; ch < 4; ch++) {
      let filled = 0;
      while (filled < width) {
        if (pos >= bytes.length) {
          throw new ViewerError("format", "HDR RLE stream truncated");
        }
        const code = bytes[pos];
        pos += 1;
        if (code > 128) {
          const run = code - 128;
          if (filled + run > width) {
            throw new ViewerError("format", "HDR RLE run overflows scanline");
          }
          if (pos >= bytes.length) {
            throw new ViewerError("format", "HDR RLE run value missing");
          }
          const value = bytes[pos];
          pos += 1;
          for (let i = 0; i < run; i++) dest[(filled + i) * 4 + ch] = value;
          filled += run;
        } else {
          if (code === 0) {
            throw new ViewerError("format", "zero-length HDR RLE literal block");
          }
          if (filled + code > width) {
            throw new ViewerError("format", "HDR RLE literals overflow scanline");
          }
          if (bytes.length - pos < code) {
            throw new ViewerError("format", "HDR RLE literal block truncated");
          }
          for (let i = 0; i < code; i++) dest[(filled + i) * 4 + ch] = bytes[pos + i];
          pos += code;
          filled += code;
        }
      }
    }
    return pos;
  }

  // flat scanline: width raw rgbe quads
  const need = 4 * width;
  if (bytes.length - pos < need) {
    throw new ViewerError("format", "flat HDR scanline truncated");
  }
  dest.set(bytes.subarray(pos, pos + need));
  return pos + need;
}
