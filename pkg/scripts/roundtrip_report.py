#!/usr/bin/env python3
"""Numeric health report for the render -> invert -> verify loop.

Prints measured errors for the analytic identities the library is built on:
furnace closure, Phong-lobe closure, albedo recovery, photometric stereo,
OLAT compositing consistency, and codec round trips.

Usage:
    python3 scripts/roundtrip_report.py [--resolution 64] [--seed 7]
"""

import argparse
import dataclasses
import tempfile
from pathlib import Path

import numpy as np

from relightkit import (
    EnvMap,
    SceneSpec,
    convolve_phong,
    diffuse_shading,
    make_rig,
    photometric_stereo,
    project_env_to_rig,
    composite,
    read_hdr,
    read_pfm,
    recover_albedo,
    relight,
    render_diffuse,
    render_olat,
    write_hdr,
    write_pfm,
)
from relightkit.scenes import generate


def row(name: str, value: float, bound: float) -> None:
    flag = "ok" if value <= bound else "EXCEEDS"
    print(f"  {name:<34} {value:12.3e}   (bound {bound:.0e})  {flag}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    env = EnvMap(rng.random((32, 64, 3)) ** 2 * 2.0)
    bundle = generate(SceneSpec(kind="sphere", resolution=args.resolution,
                                seed=args.seed))
    fg = bundle.fg_mask

    print(f"scene: sphere {args.resolution}x{args.resolution}, seed {args.seed}")

    print("closure identities")
    furnace = render_diffuse(
        bundle, EnvMap.constant(1.0)) / np.maximum(bundle.albedo, 1e-9)
    row("furnace |render/albedo - 1|", float(np.abs(furnace[fg] - 1).max()), 1e-2)
    conv = convolve_phong(EnvMap.constant(1.0))
    worst = max(float(np.abs(conv.map_for(p) * (p + 1) / (2 * np.pi) - 1).max())
                for p in (1, 16, 32, 64))
    row("phong closure |E_p(p+1)/2pi - 1|", worst, 1e-2)

    print("inverse recovery")
    shading = diffuse_shading(convolve_phong(env, exponents=(1,)),
                              bundle.normal, fg)
    albedo, low = recover_albedo(render_diffuse(bundle, env), shading, eps=0.05)
    strong = fg & ~low
    row("albedo round-trip max err", float(np.abs(albedo - bundle.albedo)[strong].max()), 1e-3)

    lamb = dataclasses.replace(bundle, f0=np.zeros_like(bundle.f0))
    stack = render_olat(lamb, make_rig(137, seed=0), intensity=np.pi,
                        component="diffuse")
    fit = photometric_stereo(stack)
    ang = np.degrees(np.arccos(np.clip(
        (fit.normals * lamb.normal).sum(-1), -1, 1)))
    row("stereo median normal err (deg)", float(np.median(ang[fg])), 1e-1)
    row("stereo max albedo err", float(np.abs(fit.albedo - lamb.albedo)[fg].max()), 1e-4)

    print("light-stage consistency")
    stack = render_olat(bundle, make_rig(137, seed=0))
    comp = composite(stack, project_env_to_rig(env, stack.rig))
    direct = relight(bundle, env)
    row("composite vs relight (mean rel)",
        float(np.abs(comp - direct).mean() / direct.mean()), 2e-2)

    print("codecs")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        img = (env.texels * 3.7).astype(np.float32)
        write_pfm(tmp / "x.pfm", img)
        exact = np.array_equal(read_pfm(tmp / "x.pfm").view(np.uint32),
                               img.view(np.uint32))
        row("pfm round-trip bit flips", 0.0 if exact else 1.0, 0.0)
        write_hdr(tmp / "x.hdr", env.texels)
        back = read_hdr(tmp / "x.hdr")
        scale = np.maximum(env.texels.max(axis=-1, keepdims=True), 1e-30)
        row("hdr round-trip max rel err", float((np.abs(back - env.texels) / scale).max()), 1e-2)


if __name__ == "__main__":
    main()
