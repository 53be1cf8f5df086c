// Viewer state and its URL-hash serialization.
//
// Invariants: yaw wraps into [0, 2*pi); exposure is finite and > 0.  The
// hash round-trips every field exactly — numbers are written with the
// shortest decimal that parses back to the identical double — so reloading
// a URL restores a bit-identical frame.

import { ViewerError } from "./errors.js";
import { TWO_PI } from "./envmap.js";

export type CompareMode = "live" | "reference" | "split";

const COMPARE_MODES: readonly CompareMode[] = ["live", "reference", "split"];

export interface ViewerState {
  /** Environment rotation about +Y, wrapped into [0, 2*pi). */
  yaw: number;
  /** Pre-tonemap radiance scale, > 0. */
  exposure: number;
  /** What the canvas shows: the live shading, the reference, or both halves. */
  mode: CompareMode;
  /** Active environment: "bundled" or the name of a user-loaded file. */
  env: string;
}

export const DEFAULT_STATE: ViewerState = {
  yaw: 0,
  exposure: 1,
  mode: "live",
  env: "bundled",
};

/** Wrap a finite yaw into [0, 2*pi); 2*pi maps to exactly 0. */
export function wrapYaw(yaw: number): number {
  if (!Number.isFinite(yaw)) {
    throw new ViewerError("state", `yaw must be finite, got ${yaw}`);
  }
  let y = yaw % TWO_PI;
  if (y < 0) y += TWO_PI;
  // adding TWO_PI to a tiny negative remainder can round up to TWO_PI
  // itself, and the remainder of an exact negative turn is -0
  return y === TWO_PI || y === 0 ? 0 : y;
}

export function checkExposure(exposure: number): number {
  if (!Number.isFinite(exposure) || exposure <= 0) {
    throw new ViewerError("state", `exposure must be positive and finite, got ${exposure}`);
  }
  return exposure;
}

function isCompareMode(v: string): v is CompareMode {
  return (COMPARE_MODES as readonly string[]).includes(v);
}

/** Apply a partial update, enforcing the state invariants. */
export function applyState(base: ViewerState, patch: Partial<ViewerState>): ViewerState {
  const next: ViewerState = { ...base };
  if (patch.yaw !== undefined) next.yaw = wrapYaw(patch.yaw);
  if (patch.exposure !== undefined) next.exposure = checkExposure(patch.exposure);
  if (patch.mode !== undefined) {
    if (!isCompareMode(patch.mode)) {
      throw new ViewerError("state", `unknown compare mode ${JSON.stringify(patch.mode)}`);
    }
    next.mode = patch.mode;
  }
  if (patch.env !== undefined) next.env = patch.env;
  return next;
}

/** Serialize to a location.hash value (leading "#"). */
export function encodeStateHash(state: ViewerState): string {
  const parts = [
    `yaw=${String(state.yaw)}`,
    `exposure=${String(state.exposure)}`,
    `mode=${state.mode}`,
    `env=${encodeURIComponent(state.env)}`,
  ];
  return `#${parts.join("&")}`;
}

/**
 * Parse a location.hash value into the fields it actually carries.  Unknown
 * keys and invalid values are ignored, so a hand-edited URL degrades
 * gracefully instead of wedging the viewer.
 */
export function parsePartialStateHash(hash: string): Partial<ViewerState> {
  const patch: Partial<ViewerState> = {};
  const body = hash.startsWith("#") ? hash.slice(1) : hash;
  if (body === "") return patch;

  for (const part of body.split("&")) {
    const eq = part.indexOf("=");
    if (eq < 0) continue;
    const key = part.slice(0, eq);
    const value = part.slice(eq + 1);
    switch (key) {
      case "yaw": {
        const y = Number(value);
        if (value !== "" && Number.isFinite(y)) patch.yaw = wrapYaw(y);
        break;
      }
      case "exposure": {
        const e = Number(value);
        if (value !== "" && Number.isFinite(e) && e > 0) patch.exposure = e;
        break;
      }
      case "mode": {
        if (isCompareMode(value)) patch.mode = value;
        break;
      }
      case "env": {
        const name = decodeURIComponent(value);
        if (name !== "") patch.env = name;
        break;
      }
      default:
        break;
    }
  }
  return patch;
}

/** Parse a location.hash value, filling absent fields from the defaults. */
export function parseStateHash(hash: string, defaults: ViewerState = DEFAULT_STATE): ViewerState {
  return { ...defaults, ...parsePartialStateHash(hash) };
}
