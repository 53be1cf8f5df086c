"""Disk layout for intrinsic bundles, OLAT stacks, and viewer exports.

A *bundle directory* holds one manifest.json plus one file per image plane.
Planes are stored either losslessly as PFM (``encoding="pfm"``) or quantized
to 16-bit PNG (``encoding="png16"``, unit-range data only; normals are packed
as (n + 1) / 2).  The mask is always a 1-bit PNG.

``export_viewer_bundle`` writes the flat directory a browser viewer consumes
over static HTTP: PFM intrinsics, the environment as both .pfm and .hdr,
pre-convolved shading maps, tone-mapped reference renders at fixed yaws, and
a manifest recording the lighting convention and the display transform so a
client can verify it renders against the same definitions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envmap import (
    ENV_CONVENTION,
    PHONG_EXPONENTS,
    EnvMap,
    convolve_phong,
    rotate_env,
    solid_angles,
)
from .formats import read_pfm, read_png, write_hdr, write_pfm, write_png
from .lightstage import LightRig, OlatStack
from .render import IntrinsicBundle, render_pbr
from .utils import clamp01

MANIFEST_NAME = "manifest.json"
BUNDLE_VERSION = 1
TONE_PIPELINE = "log1p-gamma2.2-v1"
VIEWER_YAWS = (0.0, float(np.pi) / 2.0, float(np.pi))
VIEWER_SPECULAR_ENV_HEIGHT = 16

_PLANES = ("normal", "albedo", "roughness", "f0")


def tonemap_display(linear: np.ndarray, exposure: float = 1.0) -> np.ndarray:
    """Linear radiance -> display value in [0, 1].

    The transform is ``clamp01(log1p(exposure * x)) ** (1 / 2.2)``; exposure
    scales radiance *before* the log, so doubling it brightens shadows more
    than highlights.  Viewer clients must implement the identical transform
    (manifest key ``tone_pipeline``).
    """
    if exposure <= 0 or not np.isfinite(exposure):
        raise ValueError(f"exposure must be positive and finite, got {exposure}")
    compressed = clamp01(np.log1p(exposure * np.asarray(linear, dtype=np.float64)))
    return compressed ** (1.0 / 2.2)


def display_to_png8(display: np.ndarray) -> np.ndarray:
    """[0, 1] display values -> uint8 with round-half-away quantization."""
    return np.clip(np.floor(np.asarray(display) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def _encode_unit_png16(x: np.ndarray, what: str = "data") -> np.ndarray:
    x = np.asarray(x)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{what} outside [0, 1] cannot be stored as png16")
    return np.clip(np.round(x * 65535.0), 0, 65535).astype(np.uint16)


def _decode_unit_png16(q: np.ndarray) -> np.ndarray:
    return q.astype(np.float64) / 65535.0


@dataclass
class BundleManifest:
    """Sidecar metadata stored as manifest.json inside a bundle directory."""

    kind: str
    resolution: tuple[int, int]
    encoding: str
    files: dict[str, str]
    convention: str = ENV_CONVENTION
    version: int = BUNDLE_VERSION
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "resolution": list(self.resolution),
            "encoding": self.encoding,
            "files": dict(self.files),
            "convention": self.convention,
            "version": self.version,
            "extra": self.extra,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BundleManifest":
        d = json.loads(text)
        return cls(
            kind=d["kind"],
            resolution=tuple(d["resolution"]),
            encoding=d["encoding"],
            files=d["files"],
            convention=d.get("convention", ENV_CONVENTION),
            version=d.get("version", BUNDLE_VERSION),
            extra=d.get("extra", {}),
        )


def _write_manifest(directory: Path, manifest: BundleManifest) -> None:
    (directory / MANIFEST_NAME).write_text(manifest.to_json())


def read_manifest(directory) -> BundleManifest:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    manifest = BundleManifest.from_json(path.read_text())
    if manifest.convention != ENV_CONVENTION:
        raise ValueError(
            f"bundle uses convention {manifest.convention!r}, "
            f"this build expects {ENV_CONVENTION!r}")
    return manifest


def save_bundle(directory, bundle: IntrinsicBundle, env: EnvMap | None = None,
                encoding: str = "pfm", extra: dict | None = None) -> BundleManifest:
    """Write an intrinsic bundle (and optionally its environment) to disk."""
    if encoding not in ("pfm", "png16"):
        raise ValueError(f"encoding must be 'pfm' or 'png16', got {encoding!r}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    files: dict[str, str] = {}
    ext = "pfm" if encoding == "pfm" else "png"
    for name in _PLANES:
        plane = getattr(bundle, name)
        fname = f"{name}.{ext}"
        if encoding == "pfm":
            write_pfm(directory / fname, plane)
        elif name == "normal":
            write_png(directory / fname,
                      _encode_unit_png16((plane + 1.0) * 0.5, "packed normal"))
        else:
            write_png(directory / fname, _encode_unit_png16(plane, name))
        files[name] = fname
    write_png(directory / "mask.png", bundle.fg_mask)
    files["fg_mask"] = "mask.png"
    if env is not None:
        write_pfm(directory / "env.pfm", env.texels)
        files["env"] = "env.pfm"

    manifest = BundleManifest(
        kind="intrinsics",
        resolution=bundle.resolution,
        encoding=encoding,
        files=files,
        extra=dict(extra) if extra else {},
    )
    _write_manifest(directory, manifest)
    return manifest


def load_bundle(directory) -> tuple[IntrinsicBundle, EnvMap | None]:
    """Read a bundle directory written by :func:`save_bundle`."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.kind != "intrinsics":
        raise ValueError(f"expected an intrinsics bundle, got kind {manifest.kind!r}")

    planes: dict[str, np.ndarray] = {}
    for name in _PLANES:
        data = _load_plane(directory / manifest.files[name], manifest.encoding)
        if name == "normal" and manifest.encoding == "png16":
            unpacked = data * 2.0 - 1.0
            # quantization knocks vectors slightly off unit length
            norm = np.linalg.norm(unpacked, axis=-1, keepdims=True)
            planes[name] = np.where(norm > 0.0, unpacked / np.maximum(norm, 1e-300),
                                    unpacked)
        else:
            planes[name] = data
    mask = read_png(directory / manifest.files["fg_mask"])
    bundle = IntrinsicBundle(
        normal=np.asarray(planes["normal"], dtype=np.float64),
        albedo=np.asarray(planes["albedo"], dtype=np.float64),
        roughness=np.asarray(planes["roughness"], dtype=np.float64),
        f0=np.asarray(planes["f0"], dtype=np.float64),
        fg_mask=np.asarray(mask, dtype=bool),
    )
    env = None
    if "env" in manifest.files:
        env = EnvMap(np.asarray(read_pfm(directory / manifest.files["env"]),
                                dtype=np.float64))
    return bundle, env


def _load_plane(path: Path, encoding: str) -> np.ndarray:
    if encoding == "pfm":
        return np.asarray(read_pfm(path), dtype=np.float64)
    return _decode_unit_png16(read_png(path))


def save_olat(directory, stack: OlatStack) -> BundleManifest:
    """Write an OLAT stack: one PFM per light plus rig geometry."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}
    for i in range(stack.images.shape[0]):
        fname = f"olat_{i:04d}.pfm"
        write_pfm(directory / fname, stack.images[i])
        files[f"olat_{i}"] = fname
    manifest = BundleManifest(
        kind="olat",
        resolution=(stack.images.shape[1], stack.images.shape[2]),
        encoding="pfm",
        files=files,
        extra={
            "light_count": int(stack.images.shape[0]),
            "directions": [[float(c) for c in d] for d in stack.rig.directions],
            "intensity": float(stack.intensity),
        },
    )
    _write_manifest(directory, manifest)
    return manifest


def load_olat(directory) -> OlatStack:
    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.kind != "olat":
        raise ValueError(f"expected an OLAT bundle, got kind {manifest.kind!r}")
    n = int(manifest.extra["light_count"])
    images = np.stack([
        np.asarray(read_pfm(directory / manifest.files[f"olat_{i}"]), dtype=np.float64)
        for i in range(n)
    ])
    rig = LightRig(np.asarray(manifest.extra["directions"], dtype=np.float64))
    return OlatStack(rig=rig, images=images,
                     intensity=float(manifest.extra.get("intensity", 1.0)))


def export_viewer_bundle(directory, bundle: IntrinsicBundle, env: EnvMap,
                         exposure: float = 1.0,
                         yaws: tuple[float, ...] = VIEWER_YAWS,
                         workers: int = 1) -> BundleManifest:
    """Write the static-HTTP directory a browser viewer loads.

    Contents: the four intrinsic planes and mask, the environment (.pfm and
    .hdr), a reduced environment for direct specular sums, the pre-convolved
    diffuse/gloss maps, and one tone-mapped PNG8 reference render per yaw so
    the client can verify its shading against this renderer's output.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}

    for name in _PLANES:
        fname = f"{name}.pfm"
        write_pfm(directory / fname, getattr(bundle, name))
        files[name] = fname
    write_png(directory / "mask.png", bundle.fg_mask)
    files["fg_mask"] = "mask.png"

    write_pfm(directory / "env.pfm", env.texels)
    files["env"] = "env.pfm"
    write_hdr(directory / "env.hdr", env.texels)
    files["env_hdr"] = "env.hdr"

    spec_env = downsample_env(env, VIEWER_SPECULAR_ENV_HEIGHT)
    write_pfm(directory / "env_specular.pfm", spec_env.texels)
    files["env_specular"] = "env_specular.pfm"

    conv = convolve_phong(env)
    for p in conv.exponents:
        fname = f"phong_{p:03d}.pfm"
        write_pfm(directory / fname, conv.map_for(p))
        files[f"phong_{p}"] = fname

    references = []
    for i, yaw in enumerate(yaws):
        rendered = render_pbr(bundle, rotate_env(env, yaw), workers=workers).pbr
        fname = f"reference_{i}.png"
        write_png(directory / fname, display_to_png8(tonemap_display(rendered, exposure)))
        files[f"reference_{i}"] = fname
        references.append({"yaw": float(yaw), "file": fname})

    manifest = BundleManifest(
        kind="viewer",
        resolution=bundle.resolution,
        encoding="pfm",
        files=files,
        extra={
            "tone_pipeline": TONE_PIPELINE,
            "exposure": float(exposure),
            "phong_exponents": list(PHONG_EXPONENTS),
            "references": references,
            "env_size": [env.height, env.width],
            "specular_env_size": [spec_env.height, spec_env.width],
        },
    )
    _write_manifest(directory, manifest)
    return manifest


def downsample_env(env: EnvMap, out_height: int) -> EnvMap:
    """Energy-preserving box reduction of an environment map.

    Each output texel carries the solid-angle-weighted mean of its source
    block, so ``sum(E * omega)`` is identical before and after (up to fp
    rounding) and direct-sum shading against the reduced map approximates
    the full map at a fraction of the cost.
    """
    if out_height <= 0 or env.height % out_height != 0:
        raise ValueError(
            f"out_height must divide env height {env.height}, got {out_height}")
    fy = env.height // out_height
    out_width = env.width // fy
    w_in = solid_angles(env.height, env.width)   # per-row texel weight, (H_in,)
    w_out = solid_angles(out_height, out_width)  # (H_out,)
    weighted = env.texels * w_in[:, None, None]
    blocks = weighted.reshape(out_height, fy, out_width, fy, 3).sum(axis=(1, 3))
    return EnvMap(blocks / w_out[:, None, None])
