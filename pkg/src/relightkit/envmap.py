"""Equirectangular environment lighting: texel/direction mapping, solid
angles, sampling, rotation, and cosine-power prefiltering.

Grid convention (fixed, stamped into exported manifests as ENV_CONVENTION):

* rows parameterize colatitude theta measured from the +Y axis; row 0 is the
  +Y pole cap, the last row is the -Y pole cap,
* columns parameterize longitude phi measured from the -Z axis, increasing
  toward +X (phi = pi/2 looks down +X, phi = pi looks down +Z),
* texel (r, c) covers theta in [pi r/H, pi (r+1)/H] x phi in
  [2 pi c/W, 2 pi (c+1)/W] and is sampled at the cell center,
* maps are W = 2H; the default radiance map is 32 x 64.

Solid angles use the exact spherical-cap form
(2 pi / W) * (cos theta_top - cos theta_bottom) per texel, which matches the
midpoint sin(theta) weight to O(H^-2) and sums to 4 pi exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ENV_CONVENTION = "equirect/y-up/row0=+Y/col0=-Z/east=+X/v1"

DEFAULT_ENV_HEIGHT = 32
DEFAULT_ENV_WIDTH = 64

PHONG_EXPONENTS = (1, 16, 32, 64)
DEFAULT_CONV_HEIGHT = 64
DEFAULT_CONV_WIDTH = 128


def _check_grid(height: int, width: int) -> None:
    if height < 1 or width < 2:
        raise ValueError(f"degenerate grid {height}x{width}")
    if width != 2 * height:
        raise ValueError(f"equirect grid must have width = 2*height, got {height}x{width}")


@dataclass
class EnvMap:
    """Linear-radiance equirectangular map, texels shaped (H, W, 3)."""

    texels: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.texels, dtype=np.float64)
        if t.ndim != 3 or t.shape[2] != 3:
            raise ValueError(f"env texels must be (H, W, 3), got {t.shape}")
        _check_grid(t.shape[0], t.shape[1])
        if not np.all(np.isfinite(t)):
            raise ValueError("env texels must be finite")
        if np.any(t < 0.0):
            raise ValueError("env texels must be non-negative (linear radiance)")
        self.texels = t

    @property
    def height(self) -> int:
        return self.texels.shape[0]

    @property
    def width(self) -> int:
        return self.texels.shape[1]

    @classmethod
    def constant(cls, value=1.0, height: int = DEFAULT_ENV_HEIGHT,
                 width: int = DEFAULT_ENV_WIDTH) -> "EnvMap":
        t = np.empty((height, width, 3), dtype=np.float64)
        t[:] = np.asarray(value, dtype=np.float64)
        return cls(t)

    def total_energy(self) -> np.ndarray:
        """Per-channel integral of radiance over the sphere (sum of E*omega)."""
        w = solid_angles(self.height, self.width)
        return np.einsum("rwc,r->c", self.texels, w)


# ---------------------------------------------------------------------------
# texel geometry
# ---------------------------------------------------------------------------

def texel_to_dir(row, col, height: int, width: int) -> np.ndarray:
    """Unit direction at the center of texel (row, col); broadcasts."""
    _check_grid(height, width)
    row = np.asarray(row)
    col = np.asarray(col)
    if np.any(row < 0) or np.any(row >= height) or np.any(col < 0) or np.any(col >= width):
        raise IndexError(f"texel index out of range for {height}x{width}")
    theta = np.pi * (row + 0.5) / height
    phi = 2.0 * np.pi * (col + 0.5) / width
    theta, phi = np.broadcast_arrays(theta, phi)
    st = np.sin(theta)
    return np.stack([st * np.sin(phi), np.cos(theta), -st * np.cos(phi)], axis=-1)


def dir_to_texel(d, height: int, width: int):
    """Nearest texel (row, col) containing direction d; exact inverse of
    texel_to_dir on texel centers."""
    _check_grid(height, width)
    d = np.asarray(d, dtype=np.float64)
    theta = np.arccos(np.clip(d[..., 1], -1.0, 1.0))
    phi = np.arctan2(d[..., 0], -d[..., 2]) % (2.0 * np.pi)
    row = np.clip((theta / np.pi * height).astype(np.int64), 0, height - 1)
    col = (phi / (2.0 * np.pi) * width).astype(np.int64) % width
    return row, col


def texel_dirs(height: int, width: int) -> np.ndarray:
    """(H, W, 3) grid of texel-center directions."""
    r = np.arange(height)
    c = np.arange(width)
    return texel_to_dir(r[:, None], c[None, :], height, width)


def solid_angles(height: int, width: int) -> np.ndarray:
    """Per-texel solid angle by row, shape (H,).

    Exact cap areas: every texel in row r subtends
    (2 pi / W) * (cos(pi r / H) - cos(pi (r+1) / H)) steradians, so the grid
    total is 4 pi to round-off.
    """
    _check_grid(height, width)
    edges = np.cos(np.pi * np.arange(height + 1) / height)
    return (2.0 * np.pi / width) * (edges[:-1] - edges[1:])


# ---------------------------------------------------------------------------
# sampling and rotation
# ---------------------------------------------------------------------------

def _bilinear_equirect(grid: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Bilinear lookup of an equirect grid at unit directions d.

    Longitude wraps; latitude clamps to the pole rows.
    """
    h, w = grid.shape[0], grid.shape[1]
    d = np.asarray(d, dtype=np.float64)
    theta = np.arccos(np.clip(d[..., 1], -1.0, 1.0))
    phi = np.arctan2(d[..., 0], -d[..., 2]) % (2.0 * np.pi)

    fr = theta / np.pi * h - 0.5
    fc = phi / (2.0 * np.pi) * w - 0.5
    r0 = np.floor(fr)
    c0 = np.floor(fc)
    tr = fr - r0
    tc = fc - c0

    r0i = np.clip(r0.astype(np.int64), 0, h - 1)
    r1i = np.clip(r0i + 1, 0, h - 1)
    c0i = c0.astype(np.int64) % w
    c1i = (c0i + 1) % w

    tr = tr[..., None]
    tc = tc[..., None]
    top = grid[r0i, c0i] * (1.0 - tc) + grid[r0i, c1i] * tc
    bot = grid[r1i, c0i] * (1.0 - tc) + grid[r1i, c1i] * tc
    return top * (1.0 - tr) + bot * tr


def sample_env(env: EnvMap, d) -> np.ndarray:
    """Bilinear radiance lookup at unit directions d, shape (..., 3)."""
    return _bilinear_equirect(env.texels, d)


def rotate_env(env: EnvMap, yaw: float) -> EnvMap:
    """Rotate the environment about the +Y axis.

    A feature at longitude phi moves to phi + yaw: rotated(phi) =
    original(phi - yaw).  Grid-aligned yaws (multiples of 2 pi / W) become an
    exact column roll; other angles resample with linear interpolation in
    longitude.
    """
    w = env.width
    shift = yaw / (2.0 * np.pi) * w
    k = np.round(shift)
    if abs(shift - k) < 1e-9:
        return EnvMap(np.roll(env.texels, int(k) % w, axis=1))
    c = np.arange(w)
    fc = c - shift
    c0 = np.floor(fc)
    t = (fc - c0)[None, :, None]
    c0i = c0.astype(np.int64) % w
    c1i = (c0i + 1) % w
    return EnvMap(env.texels[:, c0i, :] * (1.0 - t) + env.texels[:, c1i, :] * t)


# ---------------------------------------------------------------------------
# cosine-power prefiltering
# ---------------------------------------------------------------------------

@dataclass
class ConvolvedEnvMap:
    """Stack of cosine-power prefiltered maps, one per exponent.

    maps[i, r, c] holds sum_l E(l) <dir(r, c) . l>^p_i omega(l): the raw
    weighted integral, not normalized by 2 pi / (p + 1).
    """

    exponents: tuple[int, ...]
    maps: np.ndarray  # (P, H, W, 3)

    def __post_init__(self):
        m = np.asarray(self.maps, dtype=np.float64)
        if m.ndim != 4 or m.shape[0] != len(self.exponents) or m.shape[3] != 3:
            raise ValueError(f"conv maps must be (P, H, W, 3) matching exponents, got {m.shape}")
        _check_grid(m.shape[1], m.shape[2])
        self.maps = m
        self.exponents = tuple(int(p) for p in self.exponents)

    @property
    def height(self) -> int:
        return self.maps.shape[1]

    @property
    def width(self) -> int:
        return self.maps.shape[2]

    def map_for(self, exponent: int) -> np.ndarray:
        if exponent not in self.exponents:
            raise KeyError(f"exponent {exponent} not in {self.exponents}")
        return self.maps[self.exponents.index(exponent)]


def _default_subsamples(p: int) -> int:
    # p = 1 stays on texel centers so the prefiltered map reproduces the
    # renderer's direct texel sum exactly at grid nodes; narrow lobes need
    # sub-texel quadrature to stay inside 1% of 2 pi / (p + 1).
    return 1 if p == 1 else 4


def _phase_kernel(env_h: int, env_w: int, theta_out: np.ndarray, ratio: int,
                  phase: int, sub: int, exps: list[int]) -> list[np.ndarray]:
    """Lobe kernels K[p][ro, ri, j] for one output-column phase.

    j indexes input columns by relative longitude offset: output column
    c' = ratio*b + phase integrates input column (b - j) mod W with this
    kernel, so a roll of the input map reads back bit-identical operands and
    the convolution commutes with grid-aligned rotation exactly.
    """
    # relative azimuth between the output center and each input texel center
    j = np.arange(env_w)
    dphi = 2.0 * np.pi * (phase + 0.5 + ratio * (j - 0.5)) / (ratio * env_w)

    # sub-texel offsets
    si = (np.arange(sub) + 0.5) / sub
    # sub-row colatitudes and exact cap weights
    ri = np.arange(env_h)
    theta_sub = np.pi * (ri[:, None] + si[None, :]) / env_h           # (H, s)
    edges = np.pi * (ri[:, None] + np.arange(sub + 1)[None, :] / sub) / env_h
    w_sub = (2.0 * np.pi / (env_w * sub)) * (np.cos(edges[:, :-1]) - np.cos(edges[:, 1:]))
    # sub-column azimuth offsets relative to the texel center
    dphi_sub = dphi[:, None] - 2.0 * np.pi * (si[None, :] - 0.5) / env_w  # (W, s)

    sin_to = np.sin(theta_out)[:, None, None, None, None]
    cos_to = np.cos(theta_out)[:, None, None, None, None]
    sin_ts = np.sin(theta_sub)[None, :, None, :, None]
    cos_ts = np.cos(theta_sub)[None, :, None, :, None]
    cos_dp = np.cos(dphi_sub)[None, None, :, None, :]

    cosg = np.clip(sin_to * sin_ts * cos_dp + cos_to * cos_ts, 0.0, 1.0)
    wgt = w_sub[None, :, None, :, None]
    return [np.sum(np.power(cosg, p) * wgt, axis=(3, 4)) for p in exps]


def convolve_phong(env: EnvMap, exponents=PHONG_EXPONENTS,
                   out_height: int | None = None,
                   out_width: int | None = None,
                   subsamples: int | None = None) -> ConvolvedEnvMap:
    """Prefilter the environment with clamped-cosine-power lobes.

    Output texel (r, c) of map p holds sum over the input grid of
    E(l) <dir(r, c) . l>^p omega(l).  The sum is evaluated per output texel
    over every input texel (optionally split into subsamples x subsamples
    sub-cells for quadrature; None picks 1 for p = 1 and 4 otherwise).
    Linear in E by construction, and commutes bit-exactly with grid-aligned
    yaw rolls.
    """
    if out_height is None:
        out_height = DEFAULT_CONV_HEIGHT
    if out_width is None:
        out_width = 2 * out_height
    _check_grid(out_height, out_width)
    exps = [int(p) for p in exponents]
    if len(exps) == 0:
        raise ValueError("need at least one exponent")
    if any(p < 1 for p in exps):
        raise ValueError(f"exponents must be positive integers, got {exponents}")
    if out_width % env.width != 0:
        raise ValueError(
            f"output width {out_width} must be a multiple of env width {env.width}")
    ratio = out_width // env.width

    theta_out = np.pi * (np.arange(out_height) + 0.5) / out_height
    out = np.zeros((len(exps), out_height, out_width, 3), dtype=np.float64)

    # group exponents by their subsample factor so kernels are built once
    groups: dict[int, list[int]] = {}
    for p in exps:
        s = int(subsamples) if subsamples is not None else _default_subsamples(p)
        if s < 1:
            raise ValueError(f"subsamples must be >= 1, got {subsamples}")
        groups.setdefault(s, []).append(p)

    h, w = env.height, env.width
    j = np.arange(w)
    for phase in range(ratio):
        kernels: dict[int, np.ndarray] = {}
        for s, plist in groups.items():
            for p, k in zip(plist, _phase_kernel(h, w, theta_out, ratio, phase, s, plist)):
                kernels[p] = k.reshape(out_height, h * w)
        cols = np.arange(phase, out_width, ratio)
        for c in cols:
            b = c // ratio
            gathered = env.texels[:, (b - j) % w, :].reshape(h * w, 3)
            for ip, p in enumerate(exps):
                out[ip, :, c, :] = kernels[p] @ gathered
    return ConvolvedEnvMap(exponents=tuple(exps), maps=out)


def diffuse_shading(conv: ConvolvedEnvMap, normals: np.ndarray,
                    fg_mask: np.ndarray | None = None) -> np.ndarray:
    """Per-pixel diffuse shading: bilinear lookup of the p = 1 map at the
    surface normal.  Background pixels (fg_mask = 0) return exactly 0."""
    irr = conv.map_for(1)
    out = _bilinear_equirect(irr, normals)
    if fg_mask is not None:
        out = out * (np.asarray(fg_mask) != 0)[..., None]
    return out
