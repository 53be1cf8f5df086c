// Equirectangular environment grids: the fixed direction convention, exact
// per-row solid angles, bilinear sampling with a yaw offset, rotation,
// energy-preserving downsampling, and the p=1 cosine-lobe prefilter used for
// diffuse shading.
//
// Grid convention (must match the `convention` tag in bundle manifests):
//   * rows are colatitude from the +Y axis; row 0 is the +Y pole cap,
//   * columns are longitude from -Z increasing toward +X,
//   * texel (r, c) is sampled at its cell center,
//   * maps have width = 2 * height.

import { ViewerError } from "./errors.js";

export const ENV_CONVENTION = "equirect/y-up/row0=+Y/col0=-Z/east=+X/v1";

export const TWO_PI = 2 * Math.PI;

/** Row-major (height, width, 3) grid of linear radiance. */
export interface EnvGrid {
  height: number;
  width: number;
  texels: Float32Array | Float64Array;
}

export function checkGrid(height: number, width: number): void {
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 2) {
    throw new ViewerError("format", `degenerate grid ${height}x${width}`);
  }
  if (width !== 2 * height) {
    throw new ViewerError(
      "format",
      `equirect grid must have width = 2*height, got ${height}x${width}`,
    );
  }
}

export function makeEnvGrid(
  height: number,
  width: number,
  texels: Float32Array | Float64Array,
): EnvGrid {
  checkGrid(height, width);
  if (texels.length !== height * width * 3) {
    throw new ViewerError(
      "format",
      `env texel count ${texels.length} does not match ${height}x${width}x3`,
    );
  }
  return { height, width, texels };
}

/** Unit direction at the center of texel (row, col). */
export function texelDir(
  row: number,
  col: number,
  height: number,
  width: number,
  out: Float64Array,
): void {
  const theta = (Math.PI * (row + 0.5)) / height;
  const phi = (TWO_PI * (col + 0.5)) / width;
  const st = Math.sin(theta);
  out[0] = st * Math.sin(phi);
  out[1] = Math.cos(theta);
  out[2] = -st * Math.cos(phi);
}

/**
 * Per-texel solid angle by row: every texel in row r subtends the exact
 * spherical-cap slice (2 pi / W) * (cos(pi r / H) - cos(pi (r+1) / H)), so
 * the grid total is 4 pi to round-off.
 */
export function solidAngles(height: number, width: number): Float64Array {
  checkGrid(height, width);
  const w = new Float64Array(height);
  const k = TWO_PI / width;
  for (let r = 0; r < height; r++) {
    w[r] = k * (Math.cos((Math.PI * r) / height) - Math.cos((Math.PI * (r + 1)) / height));
  }
  return w;
}

function clampUnit(x: number): number {
  return x < -1 ? -1 : x > 1 ? 1 : x;
}

/**
 * Bilinear lookup at a unit direction, with the longitude shifted by -yaw so
 * the grid reads as if rotated by +yaw about +Y.  Longitude wraps; latitude
 * clamps to the pole rows.  Writes the interpolated RGB triple into `out`.
 */
export function sampleEquirect(
  grid: EnvGrid,
  x: number,
  y: number,
  z: number,
  yaw: number,
  out: Float64Array,
): void {
  const h = grid.height;
  const w = grid.width;
  const g = grid.texels;

  const theta = Math.acos(clampUnit(y));
  let phi = Math.atan2(x, -z) % TWO_PI;
  if (phi < 0) phi += TWO_PI;

  const fr = (theta / Math.PI) * h - 0.5;
  const fc = ((phi - yaw) / TWO_PI) * w - 0.5;
  const r0 = Math.floor(fr);
  const c0 = Math.floor(fc);
  const tr = fr - r0;
  const tc = fc - c0;

  let r0i = r0 < 0 ? 0 : r0 > h - 1 ? h - 1 : r0;
  let r1i = r0i + 1 > h - 1 ? h - 1 : r0i + 1;
  const c0i = ((c0 % w) + w) % w;
  const c1i = (c0i + 1) % w;

  r0i *= w;
  r1i *= w;
  const a = (r0i + c0i) * 3;
  const b = (r0i + c1i) * 3;
  const c = (r1i + c0i) * 3;
  const d = (r1i + c1i) * 3;
  for (let ch = 0; ch < 3; ch++) {
    const top = g[a + ch] * (1 - tc) + g[b + ch] * tc;
    const bot = g[c + ch] * (1 - tc) + g[d + ch] * tc;
    out[ch] = top * (1 - tr) + bot * tr;
  }
}

/**
 * Rotate the environment about +Y: a feature at longitude phi moves to
 * phi + yaw, i.e. rotated(phi) = original(phi - yaw).  Yaws aligned to the
 * column grid become an exact column roll; other angles resample with linear
 * interpolation in longitude.
 */
export function rotateEnv(env: EnvGrid, yaw: number): EnvGrid {
  const h = env.height;
  const w = env.width;
  const src = env.texels;
  const shift = (yaw / TWO_PI) * w;
  const k = Math.round(shift);

  if (Math.abs(shift - k) < 1e-9) {
    const roll = ((k % w) + w) % w;
    const dst =
      src instanceof Float32Array ? new Float32Array(src.length) : new Float64Array(src.length);
    for (let r = 0; r < h; r++) {
      const base = r * w;
      for (let c = 0; c < w; c++) {
        const cs = (((c - roll) % w) + w) % w;
        dst[(base + c) * 3] = src[(base + cs) * 3];
        dst[(base + c) * 3 + 1] = src[(base + cs) * 3 + 1];
        dst[(base + c) * 3 + 2] = src[(base + cs) * 3 + 2];
      }
    }
    return { height: h, width: w, texels: dst };
  }

  const dst = new Float64Array(src.length);
  for (let c = 0; c < w; c++) {
    const fc = c - shift;
    const c0 = Math.floor(fc);
    const t = fc - c0;
    const c0i = ((c0 % w) + w) % w;
    const c1i = (c0i + 1) % w;
    for (let r = 0; r < h; r++) {
      const base = r * w;
      for (let ch = 0; ch < 3; ch++) {
        dst[(base + c) * 3 + ch] =
          src[(base + c0i) * 3 + ch] * (1 - t) + src[(base + c1i) * 3 + ch] * t;
      }
    }
  }
  return { height: h, width: w, texels: dst };
}

/**
 * Energy-preserving box reduction: each output texel is the solid-angle
 * weighted mean of its source block, so sum(E * omega) is unchanged up to
 * rounding.  The reduction factor env.height / outHeight must be integral.
 */
export function downsampleEnv(env: EnvGrid, outHeight: number): EnvGrid {
  if (outHeight <= 0 || env.height % outHeight !== 0) {
    throw new ViewerError(
      "format",
      `downsample height ${outHeight} must divide env height ${env.height}`,
    );
  }
  const fy = env.height / outHeight;
  const outWidth = env.width / fy;
  checkGrid(outHeight, outWidth);

  const wIn = solidAngles(env.height, env.width);
  const wOut = solidAngles(outHeight, outWidth);
  const src = env.texels;
  const dst = new Float64Array(outHeight * outWidth * 3);

  for (let ro = 0; ro < outHeight; ro++) {
    for (let co = 0; co < outWidth; co++) {
      let s0 = 0;
      let s1 = 0;
      let s2 = 0;
      for (let dr = 0; dr < fy; dr++) {
        const ri = ro * fy + dr;
        const wr = wIn[ri];
        const base = ri * env.width;
        for (let dc = 0; dc < fy; dc++) {
          const i = (base + co * fy + dc) * 3;
          s0 += src[i] * wr;
          s1 += src[i + 1] * wr;
          s2 += src[i + 2] * wr;
        }
      }
      const o = (ro * outWidth + co) * 3;
      const inv = 1 / wOut[ro];
      dst[o] = s0 * inv;
      dst[o + 1] = s1 * inv;
      dst[o + 2] = s2 * inv;
    }
  }
  return { height: outHeight, width: outWidth, texels: dst };
}

/**
 * Clamped-cosine prefilter of the environment: output texel (r, c) holds
 * sum over every input texel of E(l) * max(dir(r, c) . l, 0) * omega(l) —
 * the raw weighted integral, not normalized.  Dividing a lookup by pi after
 * multiplying by albedo yields the Lambertian layer.
 */
export function diffuseConvolve(env: EnvGrid, outHeight: number, outWidth: number): EnvGrid {
  checkGrid(outHeight, outWidth);
  const hIn = env.height;
  const wIn = env.width;
  const n = hIn * wIn;
  const src = env.texels;

  // flatten input texel directions and energy-weighted radiance
  const lx = new Float64Array(n);
  const ly = new Float64Array(n);
  const lz = new Float64Array(n);
  const e0 = new Float64Array(n);
  const e1 = new Float64Array(n);
  const e2 = new Float64Array(n);
  const omega = solidAngles(hIn, wIn);
  const dir = new Float64Array(3);
  for (let r = 0; r < hIn; r++) {
    for (let c = 0; c < wIn; c++) {
      const i = r * wIn + c;
      texelDir(r, c, hIn, wIn, dir);
      lx[i] = dir[0];
      ly[i] = dir[1];
      lz[i] = dir[2];
      e0[i] = src[i * 3] * omega[r];
      e1[i] = src[i * 3 + 1] * omega[r];
      e2[i] = src[i * 3 + 2] * omega[r];
    }
  }

  const dst = new Float64Array(outHeight * outWidth * 3);
  for (let ro = 0; ro < outHeight; ro++) {
    for (let co = 0; co < outWidth; co++) {
      texelDir(ro, co, outHeight, outWidth, dir);
      const dx = dir[0];
      const dy = dir[1];
      const dz = dir[2];
      let s0 = 0;
      let s1 = 0;
      let s2 = 0;
      for (let i = 0; i < n; i++) {
        const d = dx * lx[i] + dy * ly[i] + dz * lz[i];
        if (d > 0) {
          s0 += d * e0[i];
          s1 += d * e1[i];
          s2 += d * e2[i];
        }
      }
      const o = (ro * outWidth + co) * 3;
      dst[o] = s0;
      dst[o + 1] = s1;
      dst[o + 2] = s2;
    }
  }
  return { height: outHeight, width: outWidth, texels: dst };
}
