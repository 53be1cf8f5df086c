// CPU shading core: Lambertian diffuse from the p=1 prefiltered environment
// plus a Cook-Torrance GGX/Smith/Schlick specular term summed directly over
// the downsampled specular environment, followed by the display tone map.
//
// The math mirrors the engine that produced the bundled reference renders:
//   * orthographic view along +Z,
//   * diffuse  = (albedo / pi) * bilinear(p=1 prefiltered env at the normal),
//   * specular = sum over env texels of D*G*F / max(4<n.l><n.v>, eps)
//                * <n.l> * E * omega, with <v.h> taken symmetrically as
//                sqrt((1 + v.l) / 2),
//   * tone map = clamp01(log1p(exposure * x)) ^ (1 / 2.2),
//   * 8-bit    = floor(display * 255 + 0.5), clipped.
//
// Pixels outside the foreground mask — and pixels whose decoded inputs are
// not finite — shade to exact black.

import { EnvGrid, rotateEnv, sampleEquirect, solidAngles, texelDir } from "./envmap.js";
import { ViewerBundle } from "./bundle.js";
import { checkExposure, wrapYaw } from "./state.js";

/** Orthographic view direction (+Z toward the camera). */
export const VIEW_DIR: readonly [number, number, number] = [0, 0, 1];

/** GGX widths below this are lifted to it; a zero-width lobe is a delta. */
export const ROUGHNESS_FLOOR = 1e-3;

/** Guard for the 4 * <n.l> * <n.v> specular denominator. */
export const SPECULAR_DENOM_EPS = 1e-6;

/** Identifier of the display transform; must match the bundle manifest. */
export const TONE_PIPELINE = "log1p-gamma2.2-v1";

const INV_GAMMA = 1 / 2.2;

function clamp01(x: number): number {
  return x < 0 ? 0 : x > 1 ? 1 : x;
}

// ── per-frame light table ───────────────────────────────────────────────

/**
 * The rotated specular environment flattened for the per-pixel sum: texel
 * directions, energy-weighted radiance E * omega, half vectors against the
 * fixed view, and the per-texel Schlick pair (1 - m^5, m^5) so Fresnel
 * reduces to f0 * a + b per pixel.  Zero-energy texels are dropped — their
 * contribution is exactly zero.
 */
export interface SpecularTable {
  count: number;
  lx: Float64Array;
  ly: Float64Array;
  lz: Float64Array;
  ew0: Float64Array;
  ew1: Float64Array;
  ew2: Float64Array;
  hx: Float64Array;
  hy: Float64Array;
  hz: Float64Array;
  fresA: Float64Array;
  fresB: Float64Array;
}

export function prepareSpecular(env: EnvGrid, yaw: number): SpecularTable {
  const rotated = rotateEnv(env, yaw);
  const h = rotated.height;
  const w = rotated.width;
  const texels = rotated.texels;
  const omega = solidAngles(h, w);

  const n = h * w;
  const table: SpecularTable = {
    count: 0,
    lx: new Float64Array(n),
    ly: new Float64Array(n),
    lz: new Float64Array(n),
    ew0: new Float64Array(n),
    ew1: new Float64Array(n),
    ew2: new Float64Array(n),
    hx: new Float64Array(n),
    hy: new Float64Array(n),
    hz: new Float64Array(n),
    fresA: new Float64Array(n),
    fresB: new Float64Array(n),
  };

  const dir = new Float64Array(3);
  let k = 0;
  for (let r = 0; r < h; r++) {
    for (let c = 0; c < w; c++) {
      const i = (r * w + c) * 3;
      const e0 = texels[i] * omega[r];
      const e1 = texels[i + 1] * omega[r];
      const e2 = texels[i + 2] * omega[r];
      if (e0 === 0 && e1 === 0 && e2 === 0) continue;

      texelDir(r, c, h, w, dir);
      const lx = dir[0];
      const ly = dir[1];
      const lz = dir[2];

      // half vector against view (0, 0, 1)
      const hx = lx;
      const hy = ly;
      const hz = lz + 1;
      const inv = 1 / Math.sqrt(hx * hx + hy * hy + hz * hz);

      // <v.h> computed symmetrically from v.l = lz
      const vdh = Math.sqrt(clamp01((1 + lz) * 0.5));
      const m = 1 - vdh;
      let m5 = m * m;
      m5 = m5 * m5 * m;

      table.lx[k] = lx;
      table.ly[k] = ly;
      table.lz[k] = lz;
      table.ew0[k] = e0;
      table.ew1[k] = e1;
      table.ew2[k] = e2;
      table.hx[k] = hx * inv;
      table.hy[k] = hy * inv;
      table.hz[k] = hz * inv;
      table.fresA[k] = 1 - m5;
      table.fresB[k] = m5;
      k++;
    }
  }
  table.count = k;
  return table;
}

/** Everything shadeRows needs for one frame at a fixed (wrapped) yaw. */
export interface FrameTables {
  yaw: number;
  spec: SpecularTable;
  diffuseEnv: EnvGrid;
}

export function prepareFrame(bundle: ViewerBundle, yaw: number): FrameTables {
  const wrapped = wrapYaw(yaw);
  return {
    yaw: wrapped,
    spec: prepareSpecular(bundle.envSpecular, wrapped),
    diffuseEnv: bundle.phongDiffuse,
  };
}

// ── per-pixel shading ───────────────────────────────────────────────────

/**
 * Shade rows [r0, r1) of the bundle into `out`, a row-major (H, W, 3)
 * Float64Array of linear radiance.  Pixels outside the mask, or with
 * non-finite inputs, are written as exact black.
 */
export function shadeRows(
  bundle: ViewerBundle,
  frame: FrameTables,
  r0: number,
  r1: number,
  out: Float64Array,
): void {
  const w = bundle.width;
  const { normal, albedo, roughness, f0: f0map, mask } = bundle;
  const { spec, diffuseEnv, yaw } = frame;
  const count = spec.count;
  const { lx, ly, lz, ew0, ew1, ew2, hx, hy, hz, fresA, fresB } = spec;
  const irr = new Float64Array(3);

  for (let r = r0; r < r1; r++) {
    for (let c = 0; c < w; c++) {
      const p = r * w + c;
      const o = p * 3;
      if (mask[p] === 0) {
        out[o] = 0;
        out[o + 1] = 0;
        out[o + 2] = 0;
        continue;
      }
      const nx = normal[o];
      const ny = normal[o + 1];
      const nz = normal[o + 2];
      const al0 = albedo[o];
      const al1 = albedo[o + 1];
      const al2 = albedo[o + 2];
      const rough = roughness[p];
      const f0 = f0map[p];
      if (
        !Number.isFinite(nx) || !Number.isFinite(ny) || !Number.isFinite(nz) ||
        !Number.isFinite(al0) || !Number.isFinite(al1) || !Number.isFinite(al2) ||
        !Number.isFinite(rough) || !Number.isFinite(f0)
      ) {
        out[o] = 0;
        out[o + 1] = 0;
        out[o + 2] = 0;
        continue;
      }

      // diffuse: albedo / pi times the prefiltered-irradiance lookup
      sampleEquirect(diffuseEnv, nx, ny, nz, yaw, irr);
      let s0 = (al0 / Math.PI) * irr[0];
      let s1 = (al1 / Math.PI) * irr[1];
      let s2 = (al2 / Math.PI) * irr[2];

      // specular: direct Cook-Torrance sum over the light table
      const alpha = rough > ROUGHNESS_FLOOR ? rough : ROUGHNESS_FLOOR;
      const a2 = alpha * alpha;
      const a2m1 = a2 - 1;
      const a2pi = a2 / Math.PI;
      const k = alpha * 0.5;
      const omk = 1 - k;
      const ndv = clamp01(nz); // n.v with view (0, 0, 1)
      const g1v = ndv / (ndv * omk + k);
      const ndv4 = 4 * ndv;

      for (let t = 0; t < count; t++) {
        const ndl = clamp01(nx * lx[t] + ny * ly[t] + nz * lz[t]);
        const ndh = clamp01(nx * hx[t] + ny * hy[t] + nz * hz[t]);
        const tt = ndh * ndh * a2m1 + 1;
        const d = a2pi / (tt * tt);
        const g1l = ndl / (ndl * omk + k);
        const fr = f0 * fresA[t] + fresB[t];
        const den = ndl * ndv4 > SPECULAR_DENOM_EPS ? ndl * ndv4 : SPECULAR_DENOM_EPS;
        const wgt = ((d * g1l * g1v * fr) / den) * ndl;
        s0 += wgt * ew0[t];
        s1 += wgt * ew1[t];
        s2 += wgt * ew2[t];
      }

      out[o] = s0;
      out[o + 1] = s1;
      out[o + 2] = s2;
    }
  }
}

/** Shade the whole frame at the given yaw (wrapped mod 2*pi internally). */
export function shadeFrame(bundle: ViewerBundle, yaw: number): Float64Array {
  const frame = prepareFrame(bundle, yaw);
  const out = new Float64Array(bundle.width * bundle.height * 3);
  shadeRows(bundle, frame, 0, bundle.height, out);
  return out;
}

// ── display transform ───────────────────────────────────────────────────

/** Linear radiance -> display value in [0, 1]; exposure scales pre-log. */
export function toneMapValue(x: number, exposure: number): number {
  return Math.pow(clamp01(Math.log1p(exposure * x)), INV_GAMMA);
}

export function toneMapImage(linear: Float64Array, exposure: number): Float64Array {
  checkExposure(exposure);
  const out = new Float64Array(linear.length);
  for (let i = 0; i < linear.length; i++) {
    out[i] = Math.pow(clamp01(Math.log1p(exposure * linear[i])), INV_GAMMA);
  }
  return out;
}

/** [0, 1] display values -> 8-bit with round-half-away quantization. */
export function quantizeDisplay(display: Float64Array): Uint8Array {
  const out = new Uint8Array(display.length);
  for (let i = 0; i < display.length; i++) {
    const q = Math.floor(display[i] * 255 + 0.5);
    out[i] = q > 0 ? (q > 255 ? 255 : q) : 0;
  }
  return out;
}
