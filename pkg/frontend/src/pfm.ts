// Portable FloatMap decoder.
//
// Layout: a header of exactly four whitespace-separated tokens — magic
// ("PF" = 3-channel, "Pf" = 1-channel), width, height, scale — followed by a
// single whitespace byte and then the raster as 4-byte IEEE floats.  A
// negative scale marks little-endian payloads, positive big-endian.  Rows
// are stored bottom-to-top; the decoder returns them top-down.

import { ViewerError } from "./errors.js";

/** Refuse absurd headers before allocating. */
export const MAX_DIM = 1 << 16;

export interface PfmImage {
  width: number;
  height: number;
  /** 1 for grayscale ("Pf"), 3 for RGB ("PF"). */
  channels: 1 | 3;
  /** Row-major, top row first, length width * height * channels. */
  data: Float32Array;
}

function isSpaceByte(b: number): boolean {
  // matches the whitespace set used when the header was written:
  // space, \t, \n, \v, \f, \r
  return b === 0x20 || (b >= 0x09 && b <= 0x0d);
}

const INT_RE = /^[+-]?\d+$/;

export function decodePfm(raw: ArrayBuffer): PfmImage {
  const bytes = new Uint8Array(raw);

  // header = exactly 4 whitespace-separated tokens, then a single
  // whitespace byte, then the raster
  const tokens: string[] = [];
  let pos = 0;
  while (tokens.length < 4) {
    while (pos < bytes.length && isSpaceByte(bytes[pos])) pos++;
    const start = pos;
    while (pos < bytes.length && !isSpaceByte(bytes[pos])) pos++;
    if (start === pos) {
      throw new ViewerError("format", "truncated PFM header");
    }
    let token = "";
    for (let i = start; i < pos; i++) token += String.fromCharCode(bytes[i]);
    tokens.push(token);
  }
  if (pos >= bytes.length) {
    throw new ViewerError("format", "PFM raster missing");
  }
  pos += 1; // the single whitespace after the scale token

  const magic = tokens[0];
  if (magic !== "PF" && magic !== "Pf") {
    throw new ViewerError("format", `not a PFM file (magic ${JSON.stringify(magic)})`);
  }
  const channels: 1 | 3 = magic === "PF" ? 3 : 1;
  if (!INT_RE.test(tokens[1]) || !INT_RE.test(tokens[2])) {
    throw new ViewerError("format", `malformed PFM dimensions ${tokens[1]}x${tokens[2]}`);
  }
  const width = Number(tokens[1]);
  const height = Number(tokens[2]);
  const scale = Number(tokens[3]);
  if (Number.isNaN(scale)) {
    throw new ViewerError("format", `malformed PFM scale ${JSON.stringify(tokens[3])}`);
  }
  if (width <= 0 || height <= 0 || width > MAX_DIM || height > MAX_DIM) {
    throw new ViewerError("format", `unreasonable PFM dimensions ${width}x${height}`);
  }
  if (scale === 0 || !Number.isFinite(scale)) {
    throw new ViewerError("format", `invalid PFM scale ${scale}`);
  }

  const count = width * height * channels;
  const need = count * 4;
  if (bytes.length - pos < need) {
    throw new ViewerError(
      "format",
      `PFM raster truncated: need ${need} bytes, have ${bytes.length - pos}`,
    );
  }
  const littleEndian = scale < 0;
  const view = new DataView(raw, pos, need);
  const data = new Float32Array(count);
  const rowLen = width * channels;
  for (let r = 0; r < height; r++) {
    // stored bottom-up: file row r lands in output row (height - 1 - r)
    const dst = (height - 1 - r) * rowLen;
    const srcByte = r * rowLen * 4;
    for (let i = 0; i < rowLen; i++) {
      data[dst + i] = view.getFloat32(srcByte + i * 4, littleEndian);
    }
  }
  return { width, height, channels, data };
}
