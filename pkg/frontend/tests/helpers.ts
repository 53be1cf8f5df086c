// Shared fixtures: load the committed test bundle from disk through the
// same code path the browser uses, with fetch and PNG decoding backed by
// node primitives.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { DecodedMask, ViewerBundle, loadViewerBundle } from "../src/bundle.js";
import { decodePngRef } from "./pngref.js";

const HERE = fileURLToPath(new URL(".", import.meta.url));

export const BUNDLE_DIR = join(HERE, "..", "testdata", "sphere96");

export function readBundleFile(name: string): Uint8Array {
  return new Uint8Array(readFileSync(join(BUNDLE_DIR, name)));
}

export function readBundleBuffer(name: string): ArrayBuffer {
  const bytes = readBundleFile(name);
  return bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength) as ArrayBuffer;
}

export function manifestText(): string {
  return new TextDecoder().decode(readBundleFile("manifest.json"));
}

export async function decodeMaskWithPngRef(data: ArrayBuffer): Promise<DecodedMask> {
  const img = decodePngRef(new Uint8Array(data));
  if (img.channels !== 1) throw new Error("mask PNG must be grayscale");
  const out = new Uint8Array(img.width * img.height);
  for (let i = 0; i < out.length; i++) out[i] = img.data[i] !== 0 ? 1 : 0;
  return { width: img.width, height: img.height, data: out };
}

export async function loadTestBundle(): Promise<ViewerBundle> {
  return loadViewerBundle(
    manifestText(),
    async (name) => readBundleBuffer(name),
    decodeMaskWithPngRef,
  );
}

export interface ReferencePng {
  width: number;
  height: number;
  data: Uint8Array;
}

/** Reference render as 8-bit RGB samples, top row first. */
export function readReferencePng(name: string): ReferencePng {
  const img = decodePngRef(readBundleFile(name));
  if (img.channels !== 3 || img.bitDepth !== 8) {
    throw new Error(`expected an 8-bit RGB reference, got depth ${img.bitDepth} x${img.channels}`);
  }
  return { width: img.width, height: img.height, data: img.data as Uint8Array };
}

/** Assert two typed arrays are element-for-element identical (no tolerance). */
export function bitwiseEqual(a: ArrayLike<number>, b: ArrayLike<number>): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (!Object.is(a[i], b[i])) return false;
  }
  return true;
}
