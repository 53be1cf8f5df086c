"""Synthetic light stage: light rigs, one-light-at-a-time rendering,
environment-to-rig projection, compositing, and photometric stereo.

OLAT unit convention: each stack image is the response to a directional
light of the recorded ``intensity`` -- a delta environment whose single lit
texel integrates to ``intensity`` steradian-weighted radiance.  With
intensity 1, compositing with weights from ``project_env_to_rig`` (each env
texel's energy E * omega binned to its nearest light) approximates a full
relight.  With intensity pi, a Lambertian surface measures
albedo * <n.l> per light, so ``photometric_stereo`` hands back the diffuse
albedo itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envmap import EnvMap, dir_to_texel, solid_angles, texel_dirs, texel_to_dir
from .render import IntrinsicBundle, render_diffuse, render_pbr
from .utils import clamp01, luminance

GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0
DEFAULT_LIGHT_COUNT = 137
SHADOW_THRESHOLD = 1e-4


@dataclass
class LightRig:
    """Unit light directions, pairwise distinct, shape (N, 3)."""

    directions: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=np.float64)
        if d.ndim != 2 or d.shape[1] != 3 or d.shape[0] < 1:
            raise ValueError(f"rig directions must be (N, 3), got {d.shape}")
        norms = np.linalg.norm(d, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("rig directions must be unit vectors")
        if len(np.unique(d.round(decimals=12), axis=0)) != d.shape[0]:
            raise ValueError("rig directions must be pairwise distinct")
        self.directions = d

    @property
    def count(self) -> int:
        return self.directions.shape[0]


def make_rig(count: int = DEFAULT_LIGHT_COUNT, seed: int = 0) -> LightRig:
    """Spherical Fibonacci rig over the full sphere.

    The seed applies a deterministic global azimuth offset, so every seed
    yields the same (well-spread) geometry in a different orientation.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    i = np.arange(count)
    y = 1.0 - (2.0 * i + 1.0) / count
    radius = np.sqrt(np.maximum(1.0 - y * y, 0.0))
    offset = 2.0 * np.pi * (((seed & 0xFFFFFFFF) * 0.6180339887498949) % 1.0)
    phi = 2.0 * np.pi * ((i / GOLDEN_RATIO) % 1.0) + offset
    d = np.stack([radius * np.sin(phi), y, -radius * np.cos(phi)], axis=-1)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return LightRig(d)


@dataclass
class RigWeights:
    """Per-light RGB energy, shape (N, 3); the binned env texel energies."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != 3:
            raise ValueError(f"weights must be (N, 3), got {w.shape}")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        self.weights = w

    @property
    def count(self) -> int:
        return self.weights.shape[0]


def project_env_to_rig(env: EnvMap, rig: LightRig) -> RigWeights:
    """Bin each env texel's energy E(l) * omega(l) to its nearest rig light
    (spherical Voronoi partition); total energy is conserved."""
    dirs = texel_dirs(env.height, env.width).reshape(-1, 3)
    omega = solid_angles(env.height, env.width)
    energy = (env.texels * omega[:, None, None]).reshape(-1, 3)
    assign = np.argmax(dirs @ rig.directions.T, axis=1)
    weights = np.zeros((rig.count, 3), dtype=np.float64)
    for i in range(rig.count):
        sel = assign == i
        if np.any(sel):
            weights[i] = energy[sel].sum(axis=0)
    return RigWeights(weights)


@dataclass
class OlatStack:
    """One rendered image per rig light, shape (N, H, W, 3), plus the rig
    that actually lit them and the per-light intensity."""

    rig: LightRig
    images: np.ndarray
    intensity: float = 1.0

    def __post_init__(self):
        im = np.asarray(self.images, dtype=np.float64)
        if im.ndim != 4 or im.shape[3] != 3:
            raise ValueError(f"stack images must be (N, H, W, 3), got {im.shape}")
        if im.shape[0] != self.rig.count:
            raise ValueError(
                f"stack has {im.shape[0]} images for {self.rig.count} lights")
        self.images = im

    @property
    def resolution(self) -> tuple[int, int]:
        return self.images.shape[1], self.images.shape[2]


def render_olat(bundle: IntrinsicBundle, rig: LightRig,
                env_height: int = 32, env_width: int = 64,
                intensity: float = 1.0, workers: int = 1,
                component: str = "pbr") -> OlatStack:
    """Render one image per rig light through the full renderer.

    Each light becomes a delta environment: its nearest texel carries
    intensity / omega so the lit texel integrates to exactly ``intensity``.
    The returned stack's rig holds the snapped texel-center directions --
    the directions the photons actually came from -- so downstream fits see
    consistent geometry.

    ``component`` selects what the virtual camera measures: "pbr" is the
    full render; "diffuse" models a cross-polarized capture that blocks the
    specular lobe, which is what a Lambertian fit such as
    :func:`photometric_stereo` expects as input.
    """
    if intensity <= 0.0:
        raise ValueError(f"intensity must be positive, got {intensity}")
    if component not in ("pbr", "diffuse"):
        raise ValueError(f"component must be 'pbr' or 'diffuse', got {component!r}")
    rows, cols = dir_to_texel(rig.directions, env_height, env_width)
    if len(np.unique(np.stack([rows, cols], axis=1), axis=0)) != rig.count:
        raise ValueError(
            f"rig lights collide on the {env_height}x{env_width} grid; "
            "use fewer lights or a finer environment")
    snapped = texel_to_dir(rows, cols, env_height, env_width)
    omega = solid_angles(env_height, env_width)

    images = np.empty((rig.count,) + bundle.resolution + (3,), dtype=np.float64)
    for i in range(rig.count):
        texels = np.zeros((env_height, env_width, 3), dtype=np.float64)
        texels[rows[i], cols[i]] = intensity / omega[rows[i]]
        env = EnvMap(texels)
        if component == "pbr":
            images[i] = render_pbr(bundle, env, workers=workers).pbr
        else:
            images[i] = render_diffuse(bundle, env, workers=workers)
    return OlatStack(rig=LightRig(snapped), images=images, intensity=intensity)


def composite(stack: OlatStack, weights: RigWeights) -> np.ndarray:
    """Weighted sum over the stack, accumulated in light index order:
    out = sum_i weights[i] * images[i] (channelwise)."""
    if weights.count != stack.rig.count:
        raise ValueError(
            f"{weights.count} weights for {stack.rig.count} lights")
    out = np.zeros(stack.images.shape[1:], dtype=np.float64)
    for i in range(stack.rig.count):
        out += stack.images[i] * weights.weights[i][None, None, :]
    return out


@dataclass
class StereoResult:
    """Per-pixel photometric stereo fit.

    normals  -- (H, W, 3) unit normals ((0, 0, 1) where invalid)
    albedo   -- (H, W, 3) per-channel reflectance rho (0 where invalid)
    valid    -- (H, W) pixels with >= 3 unshadowed lights and a well-posed solve
    residual -- (H, W) rms luminance misfit of the linear model
    """

    normals: np.ndarray
    albedo: np.ndarray
    valid: np.ndarray
    residual: np.ndarray


def photometric_stereo(stack: OlatStack,
                       shadow_threshold: float = SHADOW_THRESHOLD) -> StereoResult:
    """Classic least-squares normal/albedo recovery from an OLAT stack.

    Per pixel, lights whose luminance exceeds shadow_threshold form the
    system m_i = rho <n . l_i>; the luminance channel fixes g = rho * n via
    the 3x3 normal equations (pixels with fewer than 3 usable lights or a
    near-singular system are marked invalid), then each color channel
    re-fits its own rho against <n . l_i>.
    """
    lights = stack.rig.directions
    n_lights = lights.shape[0]
    h, w = stack.resolution
    p = h * w

    # accumulate the masked normal equations light by light
    ata = np.zeros((p, 6))            # xx, xy, xz, yy, yz, zz
    atb = np.zeros((p, 3))
    count = np.zeros(p, dtype=np.int64)
    for i in range(n_lights):
        m = luminance(stack.images[i]).reshape(-1)
        use = m > shadow_threshold
        lx, ly, lz = lights[i]
        uf = use.astype(np.float64)
        ata[:, 0] += uf * (lx * lx)
        ata[:, 1] += uf * (lx * ly)
        ata[:, 2] += uf * (lx * lz)
        ata[:, 3] += uf * (ly * ly)
        ata[:, 4] += uf * (ly * lz)
        ata[:, 5] += uf * (lz * lz)
        mu = m * uf
        atb[:, 0] += mu * lx
        atb[:, 1] += mu * ly
        atb[:, 2] += mu * lz
        count += use

    a = np.empty((p, 3, 3))
    a[:, 0, 0] = ata[:, 0]
    a[:, 0, 1] = a[:, 1, 0] = ata[:, 1]
    a[:, 0, 2] = a[:, 2, 0] = ata[:, 2]
    a[:, 1, 1] = ata[:, 3]
    a[:, 1, 2] = a[:, 2, 1] = ata[:, 4]
    a[:, 2, 2] = ata[:, 5]

    scale = (ata[:, 0] + ata[:, 3] + ata[:, 5]) / 3.0
    det = np.linalg.det(a)
    valid = (count >= 3) & (np.abs(det) > 1e-12 * np.maximum(scale, 1e-30) ** 3)

    g = np.zeros((p, 3))
    if np.any(valid):
        g[valid] = np.linalg.solve(a[valid], atb[valid][:, :, None])[:, :, 0]
    rho_lum = np.linalg.norm(g, axis=1)
    valid &= rho_lum > 0.0

    normals = np.zeros((p, 3))
    normals[:, 2] = 1.0
    normals[valid] = g[valid] / rho_lum[valid, None]

    # per-channel albedo refit and residual against the fitted normal
    num = np.zeros((p, 3))
    den = np.zeros(p)
    resid = np.zeros(p)
    for i in range(n_lights):
        img = stack.images[i].reshape(-1, 3)
        m = luminance(stack.images[i]).reshape(-1)
        use = (m > shadow_threshold).astype(np.float64)
        ndl = clamp01(normals @ lights[i])
        num += (use * ndl)[:, None] * img
        den += use * ndl * ndl
        err = (m - rho_lum * ndl) * use
        resid += err * err

    albedo = np.zeros((p, 3))
    ok = valid & (den > 0.0)
    albedo[ok] = num[ok] / den[ok, None]
    safe_count = np.maximum(count, 1)
    resid = np.sqrt(resid / safe_count)
    resid[~valid] = 0.0
    albedo[~valid] = 0.0

    return StereoResult(normals=normals.reshape(h, w, 3),
                        albedo=albedo.reshape(h, w, 3),
                        valid=valid.reshape(h, w),
                        residual=resid.reshape(h, w))
