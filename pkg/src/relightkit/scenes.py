"""Synthetic test scenes with analytic normals and procedural materials.

Two geometries:

* ``sphere``      -- an orthographically projected unit sphere; normals are
                     exact, the foreground mask is the projected disk,
* ``heightfield`` -- z = f(x, y) from hash-based value noise; normals come
                     from the analytic gradient, every pixel is foreground.

Image space: pixel (0, 0) is the top-left corner, x runs right and y runs up
in NDC coordinates [-1, 1], and the camera looks along -Z (so +Z points at
the viewer, matching the renderer's view direction).

All randomness is derived from integer hashing of lattice coordinates and the
scene seed -- no float transcendentals feed the RNG -- so a SceneSpec
regenerates the same bundle everywhere, bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .brdf import ROUGHNESS_FLOOR
from .render import IntrinsicBundle

_U64 = np.uint64
_MIX1 = _U64(0x9E3779B97F4A7C15)
_MIX2 = _U64(0xC2B2AE3D27D4EB4F)
_MIX3 = _U64(0x165667B19E3779F9)


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Lattice hash -> float64 in [0, 1); splitmix-style avalanche.

    All arithmetic wraps mod 2**64 by design; the seed term is pre-wrapped
    in Python ints so numpy never sees a scalar overflow.
    """
    seed_term = _U64((seed & 0xFFFFFFFFFFFFFFFF) * int(_MIX3)
                     & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        h = (ix.astype(np.int64).astype(_U64) * _MIX1
             + iy.astype(np.int64).astype(_U64) * _MIX2
             + seed_term)
        h ^= h >> _U64(30)
        h *= _U64(0xBF58476D1CE4E5B9)
        h ^= h >> _U64(27)
        h *= _U64(0x94D049BB133111EB)
        h ^= h >> _U64(31)
    return h.astype(np.float64) / 18446744073709551616.0


def _fade(t):
    # quintic fade: C2 continuity so gradients stay smooth
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _dfade(t):
    return 30.0 * t * t * (t * (t - 2.0) + 1.0)


def value_noise(x, y, seed: int, with_grad: bool = False):
    """Bilinearly faded lattice value noise in [0, 1); optionally returns the
    analytic gradient (value, d/dx, d/dy)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ix = np.floor(x)
    iy = np.floor(y)
    fx = x - ix
    fy = y - iy
    v00 = _hash01(ix, iy, seed)
    v10 = _hash01(ix + 1, iy, seed)
    v01 = _hash01(ix, iy + 1, seed)
    v11 = _hash01(ix + 1, iy + 1, seed)
    ux = _fade(fx)
    uy = _fade(fy)
    a = v00 + (v10 - v00) * ux
    b = v01 + (v11 - v01) * ux
    val = a + (b - a) * uy
    if not with_grad:
        return val
    dux = _dfade(fx)
    duy = _dfade(fy)
    da = (v10 - v00) * dux
    db = (v11 - v01) * dux
    dx = da + (db - da) * uy
    dy = (b - a) * duy
    return val, dx, dy


def fbm(x, y, seed: int, octaves: int = 3, with_grad: bool = False):
    """Fractal sum of value noise, centered around 0."""
    amp = 1.0
    freq = 1.0
    total = 0.0
    val = dx = dy = 0.0
    for o in range(octaves):
        s = seed * 1000003 + o
        if with_grad:
            v, gx, gy = value_noise(x * freq, y * freq, s, with_grad=True)
            dx = dx + amp * freq * gx
            dy = dy + amp * freq * gy
        else:
            v = value_noise(x * freq, y * freq, s)
        val = val + amp * (v - 0.5)
        total += amp
        amp *= 0.5
        freq *= 2.0
    if with_grad:
        return val / total, dx / total, dy / total
    return val / total


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------

@dataclass
class TextureSpec:
    """Procedural paint for one material field.

    kind   -- constant | checker | gradient | noise
    value  -- base value (float, or RGB triple for albedo)
    value2 -- second value for checker cells / gradient end / noise peak
    cells  -- checker cells across the [-1, 1] span
    scale  -- noise frequency
    """

    kind: str = "constant"
    value: object = 0.5
    value2: object = None
    cells: int = 8
    scale: float = 4.0


@dataclass
class SceneSpec:
    """Complete, serializable recipe for a synthetic scene."""

    kind: str
    resolution: int
    seed: int
    albedo: TextureSpec = field(default_factory=lambda: TextureSpec(value=(0.5, 0.5, 0.5)))
    roughness: TextureSpec = field(default_factory=lambda: TextureSpec(value=0.5))
    f0: TextureSpec = field(default_factory=lambda: TextureSpec(value=0.04))
    radius_frac: float = 0.9   # sphere: disk radius as a fraction of half-extent
    height_amp: float = 0.3    # heightfield: peak-to-center height
    noise_scale: float = 3.0   # heightfield: lateral noise frequency

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        raw = json.loads(text)
        for key in ("albedo", "roughness", "f0"):
            if key in raw and isinstance(raw[key], dict):
                tex = dict(raw[key])
                for vkey in ("value", "value2"):
                    if isinstance(tex.get(vkey), list):
                        tex[vkey] = tuple(tex[vkey])
                raw[key] = TextureSpec(**tex)
        return cls(**raw)


def _as_field(value, channels: int) -> np.ndarray:
    v = np.asarray(value, dtype=np.float64)
    if channels == 1:
        if v.ndim != 0:
            raise ValueError(f"scalar texture got non-scalar value {value!r}")
        return v
    if v.ndim == 0:
        return np.full(channels, float(v))
    if v.shape != (channels,):
        raise ValueError(f"expected {channels}-channel value, got {value!r}")
    return v


def eval_texture(tex: TextureSpec, x: np.ndarray, y: np.ndarray, seed: int,
                 channels: int) -> np.ndarray:
    """Paint a texture field over NDC coordinates; output (H, W[, channels])."""
    v1 = _as_field(tex.value, channels)
    v2 = _as_field(tex.value2 if tex.value2 is not None else tex.value, channels)
    shape = x.shape + ((channels,) if channels > 1 else ())
    if channels > 1:
        v1 = v1[None, None, :]
        v2 = v2[None, None, :]

    if tex.kind == "constant":
        return np.broadcast_to(v1, shape).copy()
    if tex.kind == "checker":
        if tex.cells < 1:
            raise ValueError(f"checker cells must be >= 1, got {tex.cells}")
        ci = np.floor((x + 1.0) * 0.5 * tex.cells) + np.floor((y + 1.0) * 0.5 * tex.cells)
        pick = (ci.astype(np.int64) % 2 == 0)
        t = pick[..., None] if channels > 1 else pick
        return np.where(t, np.broadcast_to(v1, shape), np.broadcast_to(v2, shape))
    if tex.kind == "gradient":
        t = (x + 1.0) * 0.5
        t = t[..., None] if channels > 1 else t
        return v1 + (v2 - v1) * t
    if tex.kind == "noise":
        n = value_noise(x * tex.scale, y * tex.scale, seed)
        t = n[..., None] if channels > 1 else n
        return v1 + (v2 - v1) * t
    raise ValueError(f"unknown texture kind {tex.kind!r}")


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def _ndc_grid(res: int):
    c = (np.arange(res) + 0.5) / res
    x = c * 2.0 - 1.0
    y = 1.0 - c * 2.0  # row 0 is the top of the frame
    return np.meshgrid(x, y, indexing="xy")


def generate(spec: SceneSpec) -> IntrinsicBundle:
    """Build the IntrinsicBundle described by the spec; deterministic."""
    if spec.resolution < 8:
        raise ValueError(f"resolution must be >= 8, got {spec.resolution}")
    res = spec.resolution
    x, y = _ndc_grid(res)

    if spec.kind == "sphere":
        if not (0.0 < spec.radius_frac <= 1.0):
            raise ValueError(f"radius_frac must be in (0, 1], got {spec.radius_frac}")
        r = spec.radius_frac
        rr = x * x + y * y
        fg = rr <= r * r
        nz = np.sqrt(np.maximum(r * r - rr, 0.0)) / r
        normal = np.stack([x / r, y / r, nz], axis=-1)
        normal[~fg] = (0.0, 0.0, 1.0)
    elif spec.kind == "heightfield":
        _, gx, gy = fbm(x * spec.noise_scale, y * spec.noise_scale,
                        spec.seed, with_grad=True)
        # z = amp * fbm(scale * x, ...): chain rule brings the scale out
        dzdx = spec.height_amp * spec.noise_scale * gx
        dzdy = spec.height_amp * spec.noise_scale * gy
        normal = np.stack([-dzdx, -dzdy, np.ones_like(dzdx)], axis=-1)
        normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
        fg = np.ones((res, res), dtype=bool)
    else:
        raise ValueError(f"unknown scene kind {spec.kind!r}")

    albedo = np.clip(eval_texture(spec.albedo, x, y, spec.seed + 1, 3), 0.0, 1.0)
    roughness = np.clip(eval_texture(spec.roughness, x, y, spec.seed + 2, 1),
                        ROUGHNESS_FLOOR, 1.0)
    f0 = np.clip(eval_texture(spec.f0, x, y, spec.seed + 3, 1), 0.0, 1.0)
    return IntrinsicBundle(normal=normal, albedo=albedo, roughness=roughness,
                           f0=f0, fg_mask=fg)
