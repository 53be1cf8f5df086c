"""Microfacet surface reflectance: Lambertian diffuse plus a single-lobe
Cook-Torrance specular term.

The specular lobe is assembled from the conventional three factors:

* ``d_ggx``      -- GGX (Trowbridge-Reitz) normal distribution,
* ``g_smith``    -- separable Smith shadowing-masking with the Schlick-GGX
                    single-direction form and k = alpha/2,
* ``f_schlick``  -- Schlick Fresnel with a scalar f0.

All dot products are clamped to [0, 1] before use, the roughness alpha is
used directly as the GGX width (no perceptual remapping), and the specular
denominator is guarded by ``SPECULAR_DENOM_EPS``.

Two call styles are provided.  The direction-based entry points
(``ggx_distribution``, ``smith_geometry``, ``schlick_fresnel``,
``eval_specular``, ``eval_brdf``) take unit vectors and a ``Material``; the
kernel forms (``d_ggx``, ``g_smith``, ``f_schlick``) take precomputed clamped
dots so image-sized batches can reuse them without rebuilding geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .utils import clamp01, dot, normalize

# Roughness values below this are lifted to it at Material construction and
# inside the kernels; a zero-width GGX lobe is a delta and unusable.
ROUGHNESS_FLOOR = 1e-3

# Guard for the 4 * <n.l> * <n.v> specular denominator.
SPECULAR_DENOM_EPS = 1e-6


@dataclass(frozen=True)
class Material:
    """Per-surface reflectance parameters.

    albedo      -- diffuse RGB reflectance, each channel in [0, 1]
    roughness   -- GGX width alpha in (0, 1]; values in (0, 1e-3) are clamped
                   up to the floor
    fresnel_f0  -- scalar normal-incidence reflectance in [0, 1]
    """

    albedo: tuple[float, float, float] = (0.5, 0.5, 0.5)
    roughness: float = 0.5
    fresnel_f0: float = 0.04

    def __post_init__(self):
        a = np.asarray(self.albedo, dtype=np.float64)
        if a.shape != (3,):
            raise ValueError(f"albedo must be an RGB triple, got shape {a.shape}")
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise ValueError(f"albedo components must lie in [0, 1], got {self.albedo}")
        if not np.isfinite(self.roughness) or self.roughness <= 0.0:
            raise ValueError(f"roughness must be strictly positive, got {self.roughness}")
        if self.roughness > 1.0:
            raise ValueError(f"roughness must be <= 1, got {self.roughness}")
        if not (0.0 <= self.fresnel_f0 <= 1.0):
            raise ValueError(f"fresnel_f0 must lie in [0, 1], got {self.fresnel_f0}")
        object.__setattr__(self, "albedo", tuple(float(c) for c in a))
        object.__setattr__(self, "roughness", max(float(self.roughness), ROUGHNESS_FLOOR))


# ---------------------------------------------------------------------------
# kernels on precomputed clamped dots
# ---------------------------------------------------------------------------

def d_ggx(ndh, alpha):
    """GGX distribution alpha^2 / (pi * ((n.h)^2 (alpha^2 - 1) + 1)^2)."""
    alpha = np.maximum(np.asarray(alpha, dtype=np.float64), ROUGHNESS_FLOOR)
    ndh = np.asarray(ndh, dtype=np.float64)
    a2 = alpha * alpha
    t = ndh * ndh * (a2 - 1.0) + 1.0
    return a2 / (np.pi * t * t)


def g1_schlick_ggx(ndx, alpha):
    """Single-direction Schlick-GGX visibility with k = alpha / 2."""
    k = np.maximum(np.asarray(alpha, dtype=np.float64), ROUGHNESS_FLOOR) * 0.5
    ndx = np.asarray(ndx, dtype=np.float64)
    return ndx / (ndx * (1.0 - k) + k)


def g_smith(ndv, ndl, alpha):
    """Separable Smith term G1(n.v) * G1(n.l)."""
    return g1_schlick_ggx(ndv, alpha) * g1_schlick_ggx(ndl, alpha)


def f_schlick(vdh, f0):
    """Schlick Fresnel f0 + (1 - f0)(1 - <v.h>)^5."""
    vdh = clamp01(vdh)
    f0 = np.asarray(f0, dtype=np.float64)
    m = 1.0 - vdh
    m5 = m * m
    m5 = m5 * m5 * m
    return f0 + (1.0 - f0) * m5


def half_dot_from_vl(vdl):
    """<v.h> computed symmetrically from v.l as sqrt((1 + v.l) / 2).

    For unit v and l with h = normalize(v + l), both v.h and l.h equal this
    expression; evaluating it from v.l keeps eval_specular(n, v, l) and
    eval_specular(n, l, v) bit-identical instead of merely close.
    """
    return np.sqrt(clamp01((1.0 + np.asarray(vdl, dtype=np.float64)) * 0.5))


# ---------------------------------------------------------------------------
# direction-based surface
# ---------------------------------------------------------------------------

def _check_alpha(roughness) -> np.ndarray:
    r = np.asarray(roughness, dtype=np.float64)
    if np.any(~np.isfinite(r)) or np.any(r <= 0.0):
        raise ValueError("roughness must be strictly positive and finite")
    return np.maximum(r, ROUGHNESS_FLOOR)


def ggx_distribution(n, h, roughness):
    """Microfacet density for half-vector h around normal n."""
    alpha = _check_alpha(roughness)
    return d_ggx(clamp01(dot(n, h)), alpha)


def smith_geometry(n, v, l, roughness):
    """Joint shadowing-masking for view v and light l around normal n."""
    alpha = _check_alpha(roughness)
    return g_smith(clamp01(dot(n, v)), clamp01(dot(n, l)), alpha)


def schlick_fresnel(v, h, f0):
    """Fresnel reflectance for view v against half-vector h."""
    return f_schlick(dot(v, h), f0)


def eval_diffuse(material: Material) -> np.ndarray:
    """Lambertian lobe value: albedo / pi, constant over directions."""
    return np.asarray(material.albedo, dtype=np.float64) / np.pi


def eval_specular(n, v, l, material: Material):
    """Cook-Torrance specular lobe D*G*F / (4 <n.l> <n.v>), scalar valued.

    Directions outside the upper hemisphere of n contribute zero through the
    clamped dots (G1(0) = 0); the denominator never drops below
    SPECULAR_DENOM_EPS.
    """
    n = np.asarray(n, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    alpha = _check_alpha(material.roughness)

    h = normalize(v + l)
    ndh = clamp01(dot(n, h))
    ndv = clamp01(dot(n, v))
    ndl = clamp01(dot(n, l))
    vdh = half_dot_from_vl(dot(v, l))

    num = d_ggx(ndh, alpha) * g_smith(ndv, ndl, alpha) * f_schlick(vdh, material.fresnel_f0)
    den = np.maximum(4.0 * ndl * ndv, SPECULAR_DENOM_EPS)
    return num / den


def eval_brdf(n, v, l, material: Material):
    """Full BRDF: diffuse plus specular, as an (..., 3) RGB value."""
    spec = np.asarray(eval_specular(n, v, l, material))
    diff = eval_diffuse(material)
    return diff + spec[..., None]
