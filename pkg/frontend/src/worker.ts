// Decode worker: bundle loading and environment-swap precomputation run
// here so the UI thread never stalls on raster work.  The protocol is a
// plain request/response pair keyed by id, with typed-array payloads moved
// via transfer lists.

import { ViewerError } from "./errors.js";
import { decodePfm } from "./pfm.js";
import { decodeHdr } from "./hdr.js";
import { EnvGrid, diffuseConvolve, downsampleEnv, makeEnvGrid } from "./envmap.js";
import {
  DecodedMask,
  ViewerBundle,
  loadBundleOverHttp,
} from "./bundle.js";

export interface LoadBundleRequest {
  id: number;
  op: "load-bundle";
  baseUrl: string;
}

export interface SwapEnvRequest {
  id: number;
  op: "swap-env";
  name: string;
  buffer: ArrayBuffer;
  specularHeight: number;
  diffuseHeight: number;
  diffuseWidth: number;
}

export type WorkerRequest = LoadBundleRequest | SwapEnvRequest;

export interface SwapEnvResult {
  env: EnvGrid;
  envSpecular: EnvGrid;
  phongDiffuse: EnvGrid;
}

export type WorkerResponse =
  | { id: number; ok: true; bundle: ViewerBundle }
  | { id: number; ok: true; swap: SwapEnvResult }
  | { id: number; ok: false; kind: string; message: string };

/** Decode a user-supplied environment by sniffing the magic bytes. */
export function decodeEnvFile(name: string, buffer: ArrayBuffer): EnvGrid {
  const head = new Uint8Array(buffer, 0, Math.min(2, buffer.byteLength));
  if (head.length === 2 && head[0] === 0x23 && head[1] === 0x3f) {
    const img = decodeHdr(buffer);
    return makeEnvGrid(img.height, img.width, img.data);
  }
  if (head.length === 2 && head[0] === 0x50 && (head[1] === 0x46 || head[1] === 0x66)) {
    const img = decodePfm(buffer);
    if (img.channels !== 3) {
      throw new ViewerError("format", `${name}: environment maps must have 3 channels`);
    }
    return makeEnvGrid(img.height, img.width, img.data);
  }
  throw new ViewerError("format", `${name}: expected a PFM or Radiance HDR environment`);
}

/**
 * Everything a swapped environment needs, precomputed once: the decoded
 * map, its energy-preserving specular reduction, and the p=1 prefilter.
 */
export function prepareSwappedEnv(
  name: string,
  buffer: ArrayBuffer,
  specularHeight: number,
  diffuseHeight: number,
  diffuseWidth: number,
): SwapEnvResult {
  const env = decodeEnvFile(name, buffer);
  if (env.height % specularHeight !== 0) {
    throw new ViewerError(
      "format",
      `${name}: height ${env.height} is not a multiple of the specular env height ${specularHeight}`,
    );
  }
  const envSpecular = downsampleEnv(env, specularHeight);
  const phongDiffuse = diffuseConvolve(env, diffuseHeight, diffuseWidth);
  return { env, envSpecular, phongDiffuse };
}

// ── worker plumbing (narrow facade over the worker global scope) ────────

interface WorkerScope {
  onmessage: ((ev: MessageEvent) => void) | null;
  postMessage(message: unknown, transfer?: Transferable[]): void;
}

/** Decode the mask PNG off-screen with the native decoder. */
async function decodeMaskInWorker(data: ArrayBuffer): Promise<DecodedMask> {
  const bitmap = await createImageBitmap(new Blob([data], { type: "image/png" }));
  const canvas = new OffscreenCanvas(bitmap.width, bitmap.height);
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new ViewerError("io", "2d context unavailable for mask decode");
  }
  ctx.drawImage(bitmap, 0, 0);
  const img = ctx.getImageData(0, 0, bitmap.width, bitmap.height);
  const out = new Uint8Array(bitmap.width * bitmap.height);
  for (let i = 0; i < out.length; i++) {
    out[i] = img.data[i * 4] > 127 ? 1 : 0;
  }
  return { width: bitmap.width, height: bitmap.height, data: out };
}

async function handle(req: WorkerRequest): Promise<{ reply: WorkerResponse; transfer: ArrayBuffer[] }> {
  if (req.op === "load-bundle") {
    const bundle = await loadBundleOverHttp(req.baseUrl, decodeMaskInWorker);
    return {
      reply: { id: req.id, ok: true, bundle },
      transfer: [
        bundle.normal.buffer as ArrayBuffer,
        bundle.albedo.buffer as ArrayBuffer,
        bundle.roughness.buffer as ArrayBuffer,
        bundle.f0.buffer as ArrayBuffer,
        bundle.mask.buffer as ArrayBuffer,
        bundle.env.texels.buffer as ArrayBuffer,
        bundle.envSpecular.texels.buffer as ArrayBuffer,
        bundle.phongDiffuse.texels.buffer as ArrayBuffer,
      ],
    };
  }
  const swap = prepareSwappedEnv(
    req.name,
    req.buffer,
    req.specularHeight,
    req.diffuseHeight,
    req.diffuseWidth,
  );
  return {
    reply: { id: req.id, ok: true, swap },
    transfer: [
      swap.env.texels.buffer as ArrayBuffer,
      swap.envSpecular.texels.buffer as ArrayBuffer,
      swap.phongDiffuse.texels.buffer as ArrayBuffer,
    ],
  };
}

const scope = globalThis as unknown as WorkerScope;

// only wire the message handler when actually running inside a worker
if (
  typeof scope.postMessage === "function" &&
  typeof (globalThis as { document?: unknown }).document === "undefined"
) {
  scope.onmessage = (ev: MessageEvent) => {
    const req = ev.data as WorkerRequest;
    handle(req).then(
      ({ reply, transfer }) => scope.postMessage(reply, transfer),
      (e: unknown) => {
        const kind = e instanceof ViewerError ? e.kind : "io";
        const message = e instanceof Error ? e.message : String(e);
        scope.postMessage({ id: req.id, ok: false, kind, message });
      },
    );
  };
}
