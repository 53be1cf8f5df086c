#!/usr/bin/env python3
"""Export the static viewer bundle committed under frontend/testdata/.

Builds a small textured sphere scene plus a structured studio environment
(sky gradient, ground bounce, three soft area lights) and writes a viewer
bundle with reference renders at the canonical yaws.  Deterministic: rerun
to regenerate byte-identical testdata.
"""

from __future__ import annotations

import argparse

import numpy as np

from relightkit import (
    EnvMap,
    SceneSpec,
    export_viewer_bundle,
)
from relightkit.scenes import TextureSpec, generate


def studio_env(height: int = 32) -> EnvMap:
    """Smooth studio lighting: gradient sky, warm ground, three soft boxes.

    Deliberately low-frequency so the exported specular env (a 2x box
    reduction) stays representative of the full-resolution map.
    """
    width = 2 * height
    rows = (np.arange(height) + 0.5) / height          # 0 at +Y pole
    cols = (np.arange(width) + 0.5) / width            # 0 at -Z

    # vertical gradient: cool zenith to warm horizon to dim ground
    zenith = np.array([0.30, 0.45, 0.75])
    horizon = np.array([0.55, 0.42, 0.30])
    ground = np.array([0.16, 0.12, 0.09])
    t = rows[:, None]
    sky = np.where(
        t < 0.5,
        zenith[None, :] + (horizon - zenith)[None, :] * (t / 0.5),
        horizon[None, :] + (ground - horizon)[None, :] * ((t - 0.5) / 0.5),
    )
    texels = np.broadcast_to(sky[:, None, :], (height, width, 3)).copy()

    # three gaussian area lights (row/col centers in grid units, sigma ~2 texels)
    lights = [
        ((0.28, 0.22), 2.2, np.array([5.0, 4.6, 4.0])),   # warm key, front-left
        ((0.34, 0.70), 2.6, np.array([2.2, 2.6, 3.4])),   # cool fill, right
        ((0.18, 0.50), 1.8, np.array([3.0, 3.0, 3.0])),   # white rim, behind
    ]
    rr = np.arange(height)[:, None]
    cc = np.arange(width)[None, :]
    for (fr, fc), sigma, color in lights:
        r0 = fr * height
        c0 = fc * width
        dc = np.minimum(np.abs(cc - c0), width - np.abs(cc - c0))  # wrap in longitude
        g = np.exp(-((rr - r0) ** 2 + dc**2) / (2.0 * sigma**2))
        texels += g[:, :, None] * color[None, None, :]

    return EnvMap(texels)


def scene_spec(resolution: int) -> SceneSpec:
    return SceneSpec(
        kind="sphere",
        resolution=resolution,
        seed=7,
        albedo=TextureSpec(kind="checker", value=(0.62, 0.30, 0.22),
                           value2=(0.20, 0.42, 0.66), cells=6),
        roughness=TextureSpec(kind="gradient", value=0.25, value2=0.65),
        f0=TextureSpec(value=0.04),
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="frontend/testdata/sphere96",
                    help="bundle output directory")
    ap.add_argument("--resolution", type=int, default=96)
    ap.add_argument("--exposure", type=float, default=1.0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    bundle = generate(scene_spec(args.resolution))
    env = studio_env()
    manifest = export_viewer_bundle(args.out, bundle, env,
                                    exposure=args.exposure,
                                    workers=args.workers)
    print(f"wrote {args.out}: {len(manifest.files)} files, "
          f"resolution {manifest.resolution}, exposure {args.exposure}")


if __name__ == "__main__":
    main()
