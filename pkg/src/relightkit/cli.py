"""Command-line entry points.

Every command reads/writes the bundle and image formats in this package and
exits 0 on success, 2 on usage errors (argparse), and 3 when inputs are
structurally valid but fail validation or decoding.

Commands that generate stochastic content (scenes, rigs, masks) require an
explicit --seed so runs are reproducible by construction.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .bundles import (
    display_to_png8,
    export_viewer_bundle,
    load_bundle,
    load_olat,
    save_bundle,
    save_olat,
    tonemap_display,
)
from .envmap import EnvMap, convolve_phong, rotate_env
from .formats import FormatError, read_pfm, read_png, write_hdr, write_pfm, write_png
from .intrinsics import recover_albedo, validate_bundle
from .lightstage import composite, make_rig, photometric_stereo, project_env_to_rig, render_olat
from .masks import MaskPolicy, sample_mask
from .metrics import l1, mae, mse, ssim
from .render import render_pbr
from .scenes import SceneSpec, generate

EXIT_OK = 0
EXIT_DATA = 3


def _load_env(path) -> EnvMap:
    path = Path(path)
    if path.suffix.lower() == ".hdr":
        from .formats import read_hdr
        return EnvMap(np.asarray(read_hdr(path), dtype=np.float64))
    return EnvMap(np.asarray(read_pfm(path), dtype=np.float64))


def _load_image(path) -> np.ndarray:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        return np.asarray(read_pfm(path), dtype=np.float64)
    if suffix == ".hdr":
        from .formats import read_hdr
        return np.asarray(read_hdr(path), dtype=np.float64)
    if suffix == ".png":
        data = read_png(path)
        if data.dtype == bool:
            return data.astype(np.float64)
        peak = 65535.0 if data.dtype == np.uint16 else 255.0
        return data.astype(np.float64) / peak
    raise ValueError(f"unsupported image extension {suffix!r}")


def _cmd_gen_scene(args) -> int:
    spec = SceneSpec(kind=args.kind, resolution=args.resolution, seed=args.seed)
    bundle = generate(spec)
    report = validate_bundle(bundle)
    if not report.ok:
        print(f"generated bundle failed checks: {report.failures()}", file=sys.stderr)
        return EXIT_DATA
    env = EnvMap.constant(1.0) if args.with_env else None
    save_bundle(args.out, bundle, env=env, encoding=args.encoding,
                extra={"scene_spec": json.loads(spec.to_json())})
    (Path(args.out) / "scene.json").write_text(spec.to_json() + "\n")
    print(f"wrote {args.kind} scene ({args.resolution}x{args.resolution}) to {args.out}")
    return EXIT_OK


def _cmd_render(args) -> int:
    bundle, bundled_env = load_bundle(args.bundle)
    env = _load_env(args.env) if args.env else bundled_env
    if env is None:
        print("error: no environment given and none stored in the bundle",
              file=sys.stderr)
        return EXIT_DATA
    if args.yaw:
        env = rotate_env(env, args.yaw)
    t0 = time.perf_counter()
    out = render_pbr(bundle, env, workers=args.workers, env_stride=args.env_stride)
    dt = time.perf_counter() - t0
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_pfm(out_dir / "pbr.pfm", out.pbr)
    write_pfm(out_dir / "diffuse.pfm", out.diffuse)
    write_pfm(out_dir / "specular.pfm", out.specular)
    write_png(out_dir / "preview.png",
              display_to_png8(tonemap_display(out.pbr, args.exposure)))
    print(f"rendered {bundle.resolution[0]}x{bundle.resolution[1]} in {dt:.2f}s "
          f"({args.workers} worker(s)) -> {out_dir}")
    return EXIT_OK


def _cmd_convolve(args) -> int:
    env = _load_env(args.env)
    conv = convolve_phong(env, out_height=args.out_height,
                          exponents=tuple(args.exponents))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for p in conv.exponents:
        write_pfm(out_dir / f"phong_{p:03d}.pfm", conv.map_for(p))
    print(f"convolved {env.height}x{env.width} env at exponents "
          f"{list(conv.exponents)} -> {out_dir}")
    return EXIT_OK


def _cmd_olat_render(args) -> int:
    bundle, _ = load_bundle(args.bundle)
    rig = make_rig(args.count, seed=args.seed)
    stack = render_olat(bundle, rig, intensity=args.intensity, workers=args.workers)
    save_olat(args.out, stack)
    print(f"rendered {args.count}-light OLAT stack -> {args.out}")
    return EXIT_OK


def _cmd_olat_composite(args) -> int:
    stack = load_olat(args.olat)
    env = _load_env(args.env)
    weights = project_env_to_rig(env, stack.rig)
    img = composite(stack, weights)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pfm(out, img)
    print(f"composited {stack.images.shape[0]} lights -> {out}")
    return EXIT_OK


def _cmd_stereo(args) -> int:
    stack = load_olat(args.olat)
    result = photometric_stereo(stack)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_pfm(out_dir / "normals.pfm", result.normals)
    write_pfm(out_dir / "albedo.pfm", result.albedo)
    write_png(out_dir / "valid.png", result.valid)
    write_pfm(out_dir / "residual.pfm", result.residual)
    frac = float(result.valid.mean())
    print(f"photometric stereo: {frac:.1%} of pixels valid -> {out_dir}")
    return EXIT_OK


def _cmd_recover_albedo(args) -> int:
    rendered = _load_image(args.render)
    shading = _load_image(args.shading)
    albedo, low = recover_albedo(rendered, shading)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_pfm(out_dir / "albedo.pfm", albedo)
    write_png(out_dir / "low_shading.png", low)
    print(f"recovered albedo ({float(low.mean()):.1%} low-shading) -> {out_dir}")
    return EXIT_OK


def _cmd_gen_masks(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    policy = MaskPolicy()
    counts: dict[str, int] = {}
    for i in range(args.count):
        mask = sample_mask(args.resolution, args.resolution,
                           seed=args.seed + i, policy=policy)
        write_png(out_dir / f"mask_{i:04d}_{mask.kind}.png", mask.data)
        counts[mask.kind] = counts.get(mask.kind, 0) + 1
    print(f"wrote {args.count} masks {counts} -> {out_dir}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    a = _load_image(args.pred)
    b = _load_image(args.ref)
    report = {
        "mae": mae(a, b),
        "mse": mse(a, b),
        "ssim": ssim(a, b),
    }
    if args.mask:
        mask = read_png(args.mask)
        if mask.dtype != bool:
            mask = mask > 0
        report["masked_l1"] = l1(a, b, mask=mask)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_export_viewer(args) -> int:
    bundle, bundled_env = load_bundle(args.bundle)
    env = _load_env(args.env) if args.env else bundled_env
    if env is None:
        print("error: no environment given and none stored in the bundle",
              file=sys.stderr)
        return EXIT_DATA
    export_viewer_bundle(args.out, bundle, env, exposure=args.exposure,
                         workers=args.workers)
    print(f"exported viewer bundle -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relightkit",
        description="Physically-based relighting and synthetic light-stage toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="generate a synthetic intrinsic bundle")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kind", choices=("sphere", "heightfield"), default="sphere")
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--encoding", choices=("pfm", "png16"), default="pfm")
    p.add_argument("--with-env", action="store_true",
                   help="store a uniform unit environment in the bundle")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_scene)

    p = sub.add_parser("render", help="render a bundle under an environment")
    p.add_argument("--bundle", required=True)
    p.add_argument("--env", default=None, help=".pfm or .hdr environment map")
    p.add_argument("--yaw", type=float, default=0.0,
                   help="rotate the environment about +Y first (radians)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--env-stride", type=int, default=1,
                   help="subsample environment rows/cols for fast previews")
    p.add_argument("--exposure", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("relight", help="alias of render (environment swap)")
    p.add_argument("--bundle", required=True)
    p.add_argument("--env", required=True)
    p.add_argument("--yaw", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--env-stride", type=int, default=1)
    p.add_argument("--exposure", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("convolve-hdri", help="pre-convolve an environment map")
    p.add_argument("--env", required=True)
    p.add_argument("--out-height", type=int, default=None)
    p.add_argument("--exponents", type=int, nargs="+", default=[1, 16, 32, 64])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convolve)

    p = sub.add_parser("olat-render", help="render a one-light-at-a-time stack")
    p.add_argument("--bundle", required=True)
    p.add_argument("--count", type=int, default=137)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--intensity", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_olat_render)

    p = sub.add_parser("olat-composite",
                       help="relight an OLAT stack under an environment")
    p.add_argument("--olat", required=True)
    p.add_argument("--env", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_olat_composite)

    p = sub.add_parser("photometric-stereo",
                       help="recover normals and albedo from an OLAT stack")
    p.add_argument("--olat", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stereo)

    p = sub.add_parser("recover-albedo",
                       help="divide a rendering by its diffuse shading")
    p.add_argument("--render", required=True)
    p.add_argument("--shading", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_recover_albedo)

    p = sub.add_parser("gen-masks", help="sample inpainting masks")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_masks)

    p = sub.add_parser("eval", help="compare a prediction against a reference")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--mask", default=None,
                   help="PNG mask; masked_l1 is computed over its True region")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-viewer", help="write a static viewer bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--env", default=None)
    p.add_argument("--exposure", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_viewer)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
