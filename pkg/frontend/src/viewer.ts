// Browser orchestration: owns the canvas, the viewer state, the bundle, and
// a chunked render loop that keeps the page responsive while frames shade
// on the CPU.  Bundle decoding and environment-swap precomputation happen in
// a worker when the browser provides one; compare modes blend the live
// shading with the bundled reference render nearest the current yaw.

import { ViewerError } from "./errors.js";
import { TWO_PI } from "./envmap.js";
import {
  DecodedMask,
  ReferenceEntry,
  ViewerBundle,
  loadBundleOverHttp,
} from "./bundle.js";
import { FrameTables, prepareFrame, quantizeDisplay, shadeRows, toneMapImage } from "./shading.js";
import { ViewerState, DEFAULT_STATE, applyState } from "./state.js";
import type { SwapEnvResult, WorkerRequest, WorkerResponse } from "./worker.js";
import { prepareSwappedEnv } from "./worker.js";

/** Rows shaded per animation tick; small enough to keep the UI live. */
const ROWS_PER_TICK = 24;

interface LoadedReference extends ReferenceEntry {
  bitmap: ImageBitmap;
}

export class Viewer {
  private readonly canvas: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;
  private readonly statusEl: HTMLElement;

  private bundle: ViewerBundle | null = null;
  private references: LoadedReference[] = [];
  private stateValue: ViewerState = { ...DEFAULT_STATE };

  private worker: Worker | null = null;
  private workerSeq = 0;
  private readonly workerWaits = new Map<number, (r: WorkerResponse) => void>();

  // chunked render progress
  private frame: FrameTables | null = null;
  private linear: Float64Array | null = null;
  private nextRow = 0;
  private dirty = false;
  private rafPending = false;

  /** Called after every accepted state change (for URL/controls sync). */
  onStateChange: ((state: ViewerState) => void) | null = null;

  constructor(canvas: HTMLCanvasElement, statusEl: HTMLElement) {
    this.canvas = canvas;
    this.statusEl = statusEl;
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new ViewerError("io", "2d canvas context unavailable");
    }
    this.ctx = ctx;
    if (typeof Worker !== "undefined") {
      try {
        this.worker = new Worker(new URL("./worker.js", import.meta.url), { type: "module" });
        this.worker.onmessage = (ev: MessageEvent) => {
          const msg = ev.data as WorkerResponse;
          const resolve = this.workerWaits.get(msg.id);
          if (resolve) {
            this.workerWaits.delete(msg.id);
            resolve(msg);
          }
        };
      } catch {
        this.worker = null; // decode on the main thread instead
      }
    }
  }

  get state(): ViewerState {
    return { ...this.stateValue };
  }

  get loadedBundle(): ViewerBundle | null {
    return this.bundle;
  }

  status(message: string): void {
    this.statusEl.classList.remove("error");
    this.statusEl.textContent = message;
  }

  fail(e: unknown): void {
    const msg = e instanceof ViewerError ? `${e.kind} error: ${e.message}` : String(e);
    this.statusEl.textContent = msg;
    this.statusEl.classList.add("error");
  }

  private callWorker(req: WorkerRequest, transfer: Transferable[]): Promise<WorkerResponse> {
    const worker = this.worker;
    if (!worker) {
      return Promise.reject(new ViewerError("io", "no worker available"));
    }
    const id = ++this.workerSeq;
    return new Promise((resolve) => {
      this.workerWaits.set(id, resolve);
      worker.postMessage({ ...req, id }, transfer);
    });
  }

  // ── loading ───────────────────────────────────────────────────────────

  async load(baseUrl: string, initial: Partial<ViewerState> = {}): Promise<void> {
    this.status(`loading ${baseUrl} ...`);
    try {
      let bundle: ViewerBundle;
      if (this.worker) {
        const reply = await this.callWorker({ id: 0, op: "load-bundle", baseUrl }, []);
        if (!reply.ok) {
          throw new ViewerError(reply.kind as ViewerError["kind"], reply.message);
        }
        if (!("bundle" in reply)) {
          throw new ViewerError("io", "unexpected worker reply");
        }
        bundle = reply.bundle;
      } else {
        bundle = await loadBundleOverHttp(baseUrl, decodeMaskInBrowser);
      }

      // reference renders decode with the native image pipeline for display
      const refs: LoadedReference[] = [];
      for (const ref of bundle.references) {
        const resp = await fetch(`${baseUrl}/${ref.file}`);
        if (!resp.ok) {
          throw new ViewerError("io", `GET ${baseUrl}/${ref.file} -> ${resp.status}`);
        }
        const bitmap = await createImageBitmap(
          new Blob([await resp.arrayBuffer()], { type: "image/png" }),
        );
        refs.push({ ...ref, bitmap });
      }

      this.bundle = bundle;
      this.references = refs;
      this.stateValue = applyState({ ...DEFAULT_STATE, exposure: bundle.exposure }, initial);
      this.canvas.width = bundle.width;
      this.canvas.height = bundle.height;
      this.status(
        `loaded ${baseUrl}: ${bundle.width}x${bundle.height}, ` +
          `${refs.length} references, exposure ${bundle.exposure}`,
      );
      this.onStateChange?.(this.state);
      this.requestFrame();
    } catch (e) {
      this.fail(e);
      throw e;
    }
  }

  // ── state ─────────────────────────────────────────────────────────────

  setState(patch: Partial<ViewerState>): void {
    try {
      this.stateValue = applyState(this.stateValue, patch);
    } catch (e) {
      this.fail(e);
      return;
    }
    this.onStateChange?.(this.state);
    this.requestFrame();
  }

  /** Replace the environment with a user-supplied PFM/HDR file. */
  async swapEnv(name: string, buffer: ArrayBuffer): Promise<void> {
    const bundle = this.bundle;
    if (!bundle) {
      this.fail(new ViewerError("state", "load a bundle before swapping environments"));
      return;
    }
    this.status(`decoding environment ${name} ...`);
    try {
      const specHeight = bundle.envSpecular.height;
      const dif = bundle.phongDiffuse;
      let swap: SwapEnvResult;
      if (this.worker) {
        const reply = await this.callWorker(
          {
            id: 0,
            op: "swap-env",
            name,
            buffer,
            specularHeight: specHeight,
            diffuseHeight: dif.height,
            diffuseWidth: dif.width,
          },
          [buffer],
        );
        if (!reply.ok) {
          throw new ViewerError(reply.kind as ViewerError["kind"], reply.message);
        }
        if (!("swap" in reply)) {
          throw new ViewerError("io", "unexpected worker reply");
        }
        swap = reply.swap;
      } else {
        swap = prepareSwappedEnv(name, buffer, specHeight, dif.height, dif.width);
      }
      bundle.env = swap.env;
      bundle.envSpecular = swap.envSpecular;
      bundle.phongDiffuse = swap.phongDiffuse;
      this.setState({ env: name });
      this.status(
        `environment ${name}: ${swap.env.height}x${swap.env.width} ` +
          `(references still show the bundled environment)`,
      );
    } catch (e) {
      this.fail(e);
    }
  }

  // ── chunked rendering ─────────────────────────────────────────────────

  requestFrame(): void {
    this.dirty = true;
    if (!this.rafPending) {
      this.rafPending = true;
      requestAnimationFrame(() => this.tick());
    }
  }

  private tick(): void {
    this.rafPending = false;
    const bundle = this.bundle;
    if (!bundle) return;

    if (this.dirty) {
      // restart shading for the new state
      this.dirty = false;
      this.frame = prepareFrame(bundle, this.stateValue.yaw);
      this.linear = new Float64Array(bundle.width * bundle.height * 3);
      this.nextRow = 0;
    }
    if (this.frame && this.linear && this.nextRow < bundle.height) {
      const r1 = Math.min(this.nextRow + ROWS_PER_TICK, bundle.height);
      shadeRows(bundle, this.frame, this.nextRow, r1, this.linear);
      this.nextRow = r1;
      this.present(this.nextRow);
    }
    if (this.dirty || this.nextRow < bundle.height) {
      this.rafPending = true;
      requestAnimationFrame(() => this.tick());
    }
  }

  /** Draw the shaded rows (and reference, per compare mode) to the canvas. */
  private present(rows: number): void {
    const bundle = this.bundle;
    if (!bundle || !this.linear) return;
    const { width } = bundle;

    const mode = this.stateValue.mode;
    const ref = this.nearestReference();
    if (mode === "reference" && ref) {
      this.ctx.drawImage(ref.bitmap, 0, 0);
      return;
    }

    const display = toneMapImage(
      this.linear.subarray(0, rows * width * 3),
      this.stateValue.exposure,
    );
    const quant = quantizeDisplay(display);
    const rgba = new Uint8ClampedArray(rows * width * 4);
    for (let p = 0; p < rows * width; p++) {
      rgba[p * 4] = quant[p * 3];
      rgba[p * 4 + 1] = quant[p * 3 + 1];
      rgba[p * 4 + 2] = quant[p * 3 + 2];
      rgba[p * 4 + 3] = 255;
    }
    this.ctx.putImageData(new ImageData(rgba, width, rows), 0, 0);

    if (mode === "split" && ref) {
      const half = Math.floor(this.canvas.width / 2);
      this.ctx.drawImage(
        ref.bitmap,
        half, 0, this.canvas.width - half, this.canvas.height,
        half, 0, this.canvas.width - half, this.canvas.height,
      );
    }
  }

  /** Reference render whose yaw is nearest the current yaw (wrapped). */
  nearestReference(): LoadedReference | null {
    let best: LoadedReference | null = null;
    let bestDist = Infinity;
    for (const ref of this.references) {
      let d = Math.abs(ref.yaw - this.stateValue.yaw) % TWO_PI;
      if (d > Math.PI) d = TWO_PI - d;
      if (d < bestDist) {
        bestDist = d;
        best = ref;
      }
    }
    return best;
  }
}

/** Decode the mask PNG with the browser's native decoder (no worker path). */
async function decodeMaskInBrowser(data: ArrayBuffer): Promise<DecodedMask> {
  const bitmap = await createImageBitmap(new Blob([data], { type: "image/png" }));
  const canvas = document.createElement("canvas");
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new ViewerError("io", "2d canvas context unavailable for mask decode");
  }
  ctx.drawImage(bitmap, 0, 0);
  const img = ctx.getImageData(0, 0, bitmap.width, bitmap.height);
  const out = new Uint8Array(bitmap.width * bitmap.height);
  for (let i = 0; i < out.length; i++) {
    out[i] = img.data[i * 4] > 127 ? 1 : 0;
  }
  return { width: bitmap.width, height: bitmap.height, data: out };
}
