"""Image-space renderer: per-pixel BRDF x environment quadrature.

The camera is orthographic with the view direction +Z for every pixel.
Diffuse and specular terms integrate the 32 x 64 (by default) environment by
direct summation over every texel, weighted by exact per-texel solid angles;
background pixels (fg_mask = 0) are exactly zero, and all radiometry stays
linear (log encoding happens only at export).

Rendering is embarrassingly parallel over pixels.  ``workers > 1`` splits the
image into row bands evaluated in separate processes; per-pixel results are
independent of the banding, so output bits do not depend on the worker count.
The per-pixel summation order over env texels is fixed (row-major texel
index) for the same reason.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .brdf import ROUGHNESS_FLOOR, SPECULAR_DENOM_EPS, half_dot_from_vl
from .envmap import EnvMap, solid_angles, texel_dirs
from .utils import VIEW_DIR, clamp01, normalize


@dataclass
class IntrinsicBundle:
    """Per-pixel scene description consumed by the renderer.

    normal    -- (H, W, 3) unit surface normals (camera space, +Z to viewer)
    albedo    -- (H, W, 3) diffuse reflectance in [0, 1]
    roughness -- (H, W) GGX alpha in (0, 1]
    f0        -- (H, W) scalar Fresnel normal-incidence reflectance in [0, 1]
    fg_mask   -- (H, W) foreground mask; 0 pixels render as exact zero
    """

    normal: np.ndarray
    albedo: np.ndarray
    roughness: np.ndarray
    f0: np.ndarray
    fg_mask: np.ndarray

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=np.float64)
        self.albedo = np.asarray(self.albedo, dtype=np.float64)
        self.roughness = np.asarray(self.roughness, dtype=np.float64)
        self.f0 = np.asarray(self.f0, dtype=np.float64)
        self.fg_mask = np.asarray(self.fg_mask) != 0
        h, w = self.fg_mask.shape
        if self.normal.shape != (h, w, 3) or self.albedo.shape != (h, w, 3):
            raise ValueError("normal and albedo must be (H, W, 3) matching the mask")
        if self.roughness.shape != (h, w) or self.f0.shape != (h, w):
            raise ValueError("roughness and f0 must be (H, W) matching the mask")
        for name in ("normal", "albedo", "roughness", "f0"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def resolution(self) -> tuple[int, int]:
        return self.fg_mask.shape


@dataclass
class RenderOutput:
    """Rendered linear-radiance layers; pbr = diffuse + specular per pixel."""

    diffuse: np.ndarray
    specular: np.ndarray
    pbr: np.ndarray


def _shade_band(args):
    """Shade one row band.  Module-level so it pickles for worker processes.

    Returns (diffuse_rows, specular_rows); either may be None when not
    requested.  The env texel loop is the fixed summation order.
    """
    (normal, albedo, rough, f0map, mask, ldirs, ew, hdirs, fres_c, view,
     want_diffuse, want_specular) = args

    h, w = mask.shape
    n = normal.reshape(-1, 3)
    nx, ny, nz = n[:, 0], n[:, 1], n[:, 2]

    shading = None
    spec = None
    if want_diffuse:
        shading = [np.zeros(h * w), np.zeros(h * w), np.zeros(h * w)]
    if want_specular:
        spec = [np.zeros(h * w), np.zeros(h * w), np.zeros(h * w)]
        alpha = np.maximum(rough.reshape(-1), ROUGHNESS_FLOOR)
        a2 = alpha * alpha
        a2m1 = a2 - 1.0
        a2pi = a2 / np.pi
        k = alpha * 0.5
        omk = 1.0 - k
        f0 = f0map.reshape(-1)
        ndv = clamp01(nx * view[0] + ny * view[1] + nz * view[2])
        g1v = ndv / (ndv * omk + k)
        ndv4 = 4.0 * ndv

    for t in range(ldirs.shape[0]):
        lx, ly, lz = ldirs[t]
        ndl = clamp01(nx * lx + ny * ly + nz * lz)
        if want_diffuse:
            e0, e1, e2 = ew[t]
            shading[0] += ndl * e0
            shading[1] += ndl * e1
            shading[2] += ndl * e2
        if want_specular:
            hx, hy, hz = hdirs[t]
            ndh = clamp01(nx * hx + ny * hy + nz * hz)
            tt = ndh * ndh * a2m1 + 1.0
            d = a2pi / (tt * tt)
            g1l = ndl / (ndl * omk + k)
            fr = f0 * fres_c[t][0] + fres_c[t][1]
            den = np.maximum(ndl * ndv4, SPECULAR_DENOM_EPS)
            wgt = d * g1l * g1v * fr / den * ndl
            e0, e1, e2 = ew[t]
            spec[0] += wgt * e0
            spec[1] += wgt * e1
            spec[2] += wgt * e2

    fg = mask.reshape(-1).astype(np.float64)
    out_d = out_s = None
    if want_diffuse:
        sh = np.stack(shading, axis=-1)
        out_d = (albedo.reshape(-1, 3) / np.pi * sh * fg[:, None]).reshape(h, w, 3)
    if want_specular:
        out_s = (np.stack(spec, axis=-1) * fg[:, None]).reshape(h, w, 3)
    return out_d, out_s


def _prepare_env(env: EnvMap, view: np.ndarray, env_stride: int):
    """Flatten env texels into (dirs, E*omega, half vectors, Fresnel consts),
    dropping zero-energy texels (their contribution is exactly zero)."""
    dirs = texel_dirs(env.height, env.width).reshape(-1, 3)
    w = solid_angles(env.height, env.width)
    ew = (env.texels * w[:, None, None]).reshape(-1, 3)
    if env_stride > 1:
        dirs = dirs[::env_stride]
        ew = ew[::env_stride] * env_stride  # crude preview compensation
    keep = np.any(ew != 0.0, axis=1)
    dirs = dirs[keep]
    ew = ew[keep]

    hdirs = normalize(view[None, :] + dirs)
    vdh = half_dot_from_vl(dirs @ view)
    m = 1.0 - vdh
    m5 = m * m
    m5 = m5 * m5 * m
    # Schlick as f0 * (1 - m5) + m5: per-texel scalar pair
    fres_c = np.stack([1.0 - m5, m5], axis=-1)
    return dirs, ew, hdirs, fres_c


def _render(bundle: IntrinsicBundle, env: EnvMap, view, workers: int,
            env_stride: int, want_diffuse: bool, want_specular: bool):
    view = np.asarray(view, dtype=np.float64)
    view = view / np.linalg.norm(view)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if env_stride < 1:
        raise ValueError(f"env_stride must be >= 1, got {env_stride}")
    ldirs, ew, hdirs, fres_c = _prepare_env(env, view, env_stride)

    h, w = bundle.resolution
    n_bands = min(workers, h) if workers > 1 else 1
    edges = np.linspace(0, h, n_bands + 1).astype(int)
    jobs = []
    for b in range(n_bands):
        r0, r1 = edges[b], edges[b + 1]
        jobs.append((bundle.normal[r0:r1], bundle.albedo[r0:r1],
                     bundle.roughness[r0:r1], bundle.f0[r0:r1],
                     bundle.fg_mask[r0:r1], ldirs, ew, hdirs, fres_c, view,
                     want_diffuse, want_specular))

    if n_bands == 1:
        results = [_shade_band(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_shade_band, jobs))

    def cat(idx):
        parts = [r[idx] for r in results]
        return np.concatenate(parts, axis=0) if parts[0] is not None else None

    return cat(0), cat(1)


def render_diffuse(bundle: IntrinsicBundle, env: EnvMap, workers: int = 1,
                   env_stride: int = 1) -> np.ndarray:
    """Lambertian layer: (albedo / pi) * sum_l E(l) <n.l> omega(l)."""
    d, _ = _render(bundle, env, VIEW_DIR, workers, env_stride, True, False)
    return d


def render_specular(bundle: IntrinsicBundle, env: EnvMap, view=VIEW_DIR,
                    workers: int = 1, env_stride: int = 1) -> np.ndarray:
    """Cook-Torrance layer: sum_l f_s(v, l) E(l) <n.l> omega(l)."""
    _, s = _render(bundle, env, view, workers, env_stride, False, True)
    return s


def render_pbr(bundle: IntrinsicBundle, env: EnvMap, view=VIEW_DIR,
               workers: int = 1, env_stride: int = 1) -> RenderOutput:
    """Full render; pbr is the exact per-pixel sum diffuse + specular."""
    d, s = _render(bundle, env, view, workers, env_stride, True, True)
    return RenderOutput(diffuse=d, specular=s, pbr=d + s)


def relight(bundle: IntrinsicBundle, env: EnvMap, view=VIEW_DIR,
            workers: int = 1) -> np.ndarray:
    """Render the bundle under a new environment (the pbr layer)."""
    return render_pbr(bundle, env, view=view, workers=workers).pbr
