// Bundle loading: manifest parsing/validation and assembly of the decoded
// planes into the structure the shading core consumes.
//
// A viewer bundle is a directory of files described by manifest.json:
// geometry/material planes (normal, albedo, roughness, f0 as PFM; the
// foreground mask as PNG), the environment (full-resolution PFM plus an HDR
// copy and a downsampled specular PFM), prefiltered cosine-lobe maps, and
// tone-mapped reference renders at known yaws.  Fetching and PNG decoding
// are injected so the same loader runs in the browser and in tests.

import { ViewerError } from "./errors.js";
import { ENV_CONVENTION, EnvGrid, makeEnvGrid } from "./envmap.js";
import { decodePfm } from "./pfm.js";

export const BUNDLE_VERSION = 1;
export const BUNDLE_KIND = "viewer";
export const BUNDLE_ENCODING = "pfm";
export const EXPECTED_TONE_PIPELINE = "log1p-gamma2.2-v1";

export interface ReferenceEntry {
  yaw: number;
  file: string;
}

export interface BundleManifest {
  kind: string;
  resolution: [number, number];
  encoding: string;
  files: Record<string, string>;
  convention: string;
  version: number;
  exposure: number;
  tonePipeline: string;
  phongExponents: number[];
  references: ReferenceEntry[];
  envSize: [number, number];
  specularEnvSize: [number, number];
}

export interface ViewerBundle {
  width: number;
  height: number;
  /** Row-major (H, W, 3) planes. */
  normal: Float32Array;
  albedo: Float32Array;
  /** Row-major (H, W) planes. */
  roughness: Float32Array;
  f0: Float32Array;
  /** Row-major (H, W), 1 = foreground. */
  mask: Uint8Array;
  /** Full-resolution environment radiance. */
  env: EnvGrid;
  /** Downsampled environment driving the specular texel sum. */
  envSpecular: EnvGrid;
  /** p=1 prefiltered map driving the diffuse lookup. */
  phongDiffuse: EnvGrid;
  exposure: number;
  tonePipeline: string;
  references: ReferenceEntry[];
  manifest: BundleManifest;
}

export type FetchFile = (name: string) => Promise<ArrayBuffer>;

export interface DecodedMask {
  width: number;
  height: number;
  /** Row-major, nonzero = foreground. */
  data: Uint8Array;
}

export type DecodeMaskPng = (data: ArrayBuffer) => Promise<DecodedMask>;

// ── manifest ────────────────────────────────────────────────────────────

const REQUIRED_FILE_KEYS = [
  "normal",
  "albedo",
  "roughness",
  "f0",
  "fg_mask",
  "env",
  "env_specular",
  "phong_1",
] as const;

function asPair(v: unknown, what: string): [number, number] {
  if (!Array.isArray(v) || v.length !== 2 || !v.every((n) => Number.isInteger(n) && n > 0)) {
    throw new ViewerError("manifest", `${what} must be a pair of positive integers, got ${JSON.stringify(v)}`);
  }
  return [v[0] as number, v[1] as number];
}

export function parseManifest(text: string): BundleManifest {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new ViewerError("manifest", `manifest is not valid JSON: ${String(e)}`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new ViewerError("manifest", "manifest must be a JSON object");
  }
  const m = raw as Record<string, unknown>;

  if (m.kind !== BUNDLE_KIND) {
    throw new ViewerError("manifest", `expected a ${BUNDLE_KIND} bundle, got kind ${JSON.stringify(m.kind)}`);
  }
  if (m.version !== BUNDLE_VERSION) {
    throw new ViewerError("manifest", `unsupported bundle version ${JSON.stringify(m.version)} (viewer supports ${BUNDLE_VERSION})`);
  }
  if (m.convention !== ENV_CONVENTION) {
    throw new ViewerError("manifest", `environment convention mismatch: bundle says ${JSON.stringify(m.convention)}, viewer implements ${JSON.stringify(ENV_CONVENTION)}`);
  }
  if (m.encoding !== BUNDLE_ENCODING) {
    throw new ViewerError("manifest", `unsupported plane encoding ${JSON.stringify(m.encoding)}`);
  }
  const resolution = asPair(m.resolution, "resolution");

  const files = m.files;
  if (typeof files !== "object" || files === null || Array.isArray(files)) {
    throw new ViewerError("manifest", "manifest.files must be an object");
  }
  const fileMap: Record<string, string> = {};
  for (const [k, v] of Object.entries(files as Record<string, unknown>)) {
    if (typeof v !== "string" || v === "") {
      throw new ViewerError("manifest", `manifest.files[${JSON.stringify(k)}] must be a file name`);
    }
    fileMap[k] = v;
  }
  for (const key of REQUIRED_FILE_KEYS) {
    if (!(key in fileMap)) {
      throw new ViewerError("manifest", `manifest.files is missing ${JSON.stringify(key)}`);
    }
  }

  const extra = (typeof m.extra === "object" && m.extra !== null ? m.extra : {}) as Record<string, unknown>;
  const exposure = extra.exposure;
  if (typeof exposure !== "number" || !Number.isFinite(exposure) || exposure <= 0) {
    throw new ViewerError("manifest", `manifest exposure must be a positive number, got ${JSON.stringify(exposure)}`);
  }
  const tonePipeline = extra.tone_pipeline;
  if (tonePipeline !== EXPECTED_TONE_PIPELINE) {
    throw new ViewerError("manifest", `unknown tone pipeline ${JSON.stringify(tonePipeline)} (viewer implements ${JSON.stringify(EXPECTED_TONE_PIPELINE)})`);
  }
  const exponents = Array.isArray(extra.phong_exponents)
    ? (extra.phong_exponents as unknown[]).filter((p): p is number => Number.isInteger(p) && (p as number) >= 1)
    : [];
  if (!exponents.includes(1)) {
    throw new ViewerError("manifest", "manifest must list a p=1 prefiltered map for diffuse shading");
  }

  const refsRaw = extra.references;
  if (!Array.isArray(refsRaw)) {
    throw new ViewerError("manifest", "manifest must list reference renders");
  }
  const references: ReferenceEntry[] = refsRaw.map((r, i) => {
    const e = r as Record<string, unknown>;
    if (typeof e !== "object" || e === null ||
        typeof e.yaw !== "number" || !Number.isFinite(e.yaw) ||
        typeof e.file !== "string" || e.file === "") {
      throw new ViewerError("manifest", `reference entry ${i} must have a finite yaw and a file name`);
    }
    return { yaw: e.yaw, file: e.file };
  });

  return {
    kind: m.kind,
    resolution,
    encoding: m.encoding,
    files: fileMap,
    convention: m.convention as string,
    version: m.version,
    exposure,
    tonePipeline,
    phongExponents: exponents,
    references,
    envSize: asPair(extra.env_size, "env_size"),
    specularEnvSize: asPair(extra.specular_env_size, "specular_env_size"),
  };
}

// ── assembly ────────────────────────────────────────────────────────────

async function fetchOrExplain(fetchFile: FetchFile, name: string): Promise<ArrayBuffer> {
  try {
    return await fetchFile(name);
  } catch (e) {
    if (e instanceof ViewerError) throw e;
    throw new ViewerError("io", `failed to fetch ${JSON.stringify(name)}: ${String(e)}`);
  }
}

function decodePlane(
  buf: ArrayBuffer,
  name: string,
  width: number,
  height: number,
  channels: 1 | 3,
): Float32Array {
  const img = decodePfm(buf);
  if (img.width !== width || img.height !== height || img.channels !== channels) {
    throw new ViewerError(
      "format",
      `${name}: expected ${width}x${height}x${channels}, got ${img.width}x${img.height}x${img.channels}`,
    );
  }
  return img.data;
}

function decodeEnvGrid(buf: ArrayBuffer, name: string, size?: [number, number]): EnvGrid {
  const img = decodePfm(buf);
  if (img.channels !== 3) {
    throw new ViewerError("format", `${name}: environment maps must have 3 channels`);
  }
  if (size && (img.height !== size[0] || img.width !== size[1])) {
    throw new ViewerError(
      "format",
      `${name}: expected ${size[0]}x${size[1]}, got ${img.height}x${img.width}`,
    );
  }
  return makeEnvGrid(img.height, img.width, img.data);
}

/** Read bundle files relative to a base URL with fetch(). */
export async function loadBundleOverHttp(
  baseUrl: string,
  decodeMask: DecodeMaskPng,
): Promise<ViewerBundle> {
  const get = async (name: string): Promise<Response> => {
    const resp = await fetch(`${baseUrl}/${name}`);
    if (!resp.ok) {
      throw new ViewerError("io", `GET ${baseUrl}/${name} -> ${resp.status}`);
    }
    return resp;
  };
  const manifestText = await (await get("manifest.json")).text();
  return loadViewerBundle(
    manifestText,
    async (name) => (await get(name)).arrayBuffer(),
    decodeMask,
  );
}

/**
 * Fetch and decode every plane the shading core needs.  `fetchFile` receives
 * file names from the manifest; `decodeMask` turns the mask PNG into a
 * foreground bitmap (injected because PNG decoding differs between the
 * browser and tests).
 */
export async function loadViewerBundle(
  manifestText: string,
  fetchFile: FetchFile,
  decodeMask: DecodeMaskPng,
): Promise<ViewerBundle> {
  const manifest = parseManifest(manifestText);
  const [height, width] = manifest.resolution;
  const f = manifest.files;

  const names = [f.normal, f.albedo, f.roughness, f.f0, f.fg_mask, f.env, f.env_specular, f.phong_1];
  const bufs = await Promise.all(names.map((n) => fetchOrExplain(fetchFile, n)));

  const normal = decodePlane(bufs[0], f.normal, width, height, 3);
  const albedo = decodePlane(bufs[1], f.albedo, width, height, 3);
  const roughness = decodePlane(bufs[2], f.roughness, width, height, 1);
  const f0 = decodePlane(bufs[3], f.f0, width, height, 1);

  const maskImg = await decodeMask(bufs[4]);
  if (maskImg.width !== width || maskImg.height !== height) {
    throw new ViewerError(
      "format",
      `${f.fg_mask}: expected ${width}x${height}, got ${maskImg.width}x${maskImg.height}`,
    );
  }
  const mask = new Uint8Array(width * height);
  for (let i = 0; i < mask.length; i++) mask[i] = maskImg.data[i] !== 0 ? 1 : 0;

  const env = decodeEnvGrid(bufs[5], f.env, manifest.envSize);
  const envSpecular = decodeEnvGrid(bufs[6], f.env_specular, manifest.specularEnvSize);
  const phongDiffuse = decodeEnvGrid(bufs[7], f.phong_1);

  return {
    width,
    height,
    normal,
    albedo,
    roughness,
    f0,
    mask,
    env,
    envSpecular,
    phongDiffuse,
    exposure: manifest.exposure,
    tonePipeline: manifest.tonePipeline,
    references: manifest.references,
    manifest,
  };
}
