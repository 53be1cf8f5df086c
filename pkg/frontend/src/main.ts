// Page wiring: binds the viewer to the DOM controls, the ?bundle= query
// parameter, and the URL hash (which round-trips the full viewer state so a
// reload restores the identical frame).

import { Viewer } from "./viewer.js";
import {
  CompareMode,
  ViewerState,
  DEFAULT_STATE,
  encodeStateHash,
  parsePartialStateHash,
} from "./state.js";
import { TWO_PI } from "./envmap.js";

const DEFAULT_BUNDLE = "testdata/sphere96";

function el<T extends HTMLElement>(id: string): T {
  const e = document.getElementById(id);
  if (!e) throw new Error(`missing element #${id}`);
  return e as T;
}

function main(): void {
  const canvas = el<HTMLCanvasElement>("view");
  const statusEl = el<HTMLElement>("status");
  const yawSlider = el<HTMLInputElement>("yaw");
  const yawValue = el<HTMLElement>("yaw-value");
  const exposureSlider = el<HTMLInputElement>("exposure");
  const exposureValue = el<HTMLElement>("exposure-value");
  const modeSelect = el<HTMLSelectElement>("mode");
  const envInput = el<HTMLInputElement>("env-file");
  const envLabel = el<HTMLElement>("env-name");
  const resetButton = el<HTMLButtonElement>("reset");

  const viewer = new Viewer(canvas, statusEl);
  const params = new URLSearchParams(window.location.search);
  const bundleUrl = params.get("bundle") ?? DEFAULT_BUNDLE;

  let syncingControls = false;

  const showState = (s: ViewerState): void => {
    syncingControls = true;
    yawSlider.value = String(s.yaw);
    yawValue.textContent = `${s.yaw.toFixed(3)} rad`;
    exposureSlider.value = String(Math.log2(s.exposure));
    exposureValue.textContent = s.exposure.toPrecision(3);
    modeSelect.value = s.mode;
    envLabel.textContent = s.env;
    syncingControls = false;

    const hash = encodeStateHash(s);
    if (window.location.hash !== hash) {
      history.replaceState(null, "", hash);
    }
  };

  viewer.onStateChange = showState;

  yawSlider.addEventListener("input", () => {
    if (!syncingControls) viewer.setState({ yaw: Number(yawSlider.value) });
  });
  exposureSlider.addEventListener("input", () => {
    if (!syncingControls) viewer.setState({ exposure: Math.pow(2, Number(exposureSlider.value)) });
  });
  modeSelect.addEventListener("change", () => {
    if (!syncingControls) viewer.setState({ mode: modeSelect.value as CompareMode });
  });
  resetButton.addEventListener("click", () => {
    const exposure = viewer.loadedBundle?.exposure ?? DEFAULT_STATE.exposure;
    viewer.setState({ yaw: 0, exposure, mode: "live" });
  });
  envInput.addEventListener("change", () => {
    const file = envInput.files?.[0];
    if (!file) return;
    file.arrayBuffer().then(
      (buf) => viewer.swapEnv(file.name, buf),
      (e: unknown) => viewer.fail(e),
    );
  });
  window.addEventListener("hashchange", () => {
    viewer.setState(parsePartialStateHash(window.location.hash));
  });

  // restore serialized state; a non-bundled env name cannot be restored from
  // a URL (it was a local file), so fall back to the bundled environment
  const initial = parsePartialStateHash(window.location.hash);
  if (initial.env !== undefined && initial.env !== "bundled") {
    initial.env = "bundled";
  }
  yawSlider.min = "0";
  yawSlider.max = String(TWO_PI);
  yawSlider.step = "0.0001";

  viewer.load(bundleUrl, initial).catch(() => {
    // load() already surfaced the error in the status line
  });
}

main();
