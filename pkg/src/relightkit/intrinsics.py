"""Inverse-rendering utilities: diffuse albedo recovery and bundle
validation diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .brdf import ROUGHNESS_FLOOR
from .render import IntrinsicBundle

SHADING_EPS = 1e-3
ALBEDO_MAX = 1.0


def recover_albedo(render: np.ndarray, shading: np.ndarray,
                   eps: float = SHADING_EPS,
                   albedo_max: float = ALBEDO_MAX):
    """Invert the Lambertian model: albedo = pi * render / max(shading, eps).

    The division is channelwise.  Returns (albedo, low_shading) where
    low_shading flags pixels whose shading fell below eps in any channel --
    there the division is untrustworthy and the clamp dominates.  Output is
    clamped to [0, albedo_max].
    """
    render = np.asarray(render, dtype=np.float64)
    shading = np.asarray(shading, dtype=np.float64)
    if render.shape != shading.shape:
        raise ValueError(f"shape mismatch {render.shape} vs {shading.shape}")
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    albedo = np.pi * render / np.maximum(shading, eps)
    albedo = np.clip(albedo, 0.0, albedo_max)
    low = np.any(shading < eps, axis=-1) if shading.ndim == 3 else shading < eps
    return albedo, low


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_pixel: tuple[int, int] | None = None
    magnitude: float = 0.0


@dataclass
class Diagnostics:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _worst(err: np.ndarray) -> tuple[tuple[int, int], float]:
    idx = np.unravel_index(int(np.argmax(err)), err.shape)
    return (int(idx[0]), int(idx[1])), float(err[idx])


def validate_bundle(bundle: IntrinsicBundle, unit_tol: float = 1e-3) -> Diagnostics:
    """Deterministic sanity checks on an intrinsic bundle.

    Each check reports pass/fail plus the worst offending pixel and its
    violation magnitude, so a broken import points straight at the culprit.
    """
    checks: list[CheckResult] = []
    fg = bundle.fg_mask

    norm_err = np.abs(np.linalg.norm(bundle.normal, axis=-1) - 1.0)
    norm_err = np.where(fg, norm_err, 0.0)
    pix, mag = _worst(norm_err)
    checks.append(CheckResult("normal_unit_length", mag <= unit_tol, pix, mag))

    z_neg = np.where(fg, np.maximum(-bundle.normal[..., 2], 0.0), 0.0)
    pix, mag = _worst(z_neg)
    checks.append(CheckResult("normal_front_facing", mag <= 0.0, pix, mag))

    alb_err = np.maximum(bundle.albedo - 1.0, -bundle.albedo).max(axis=-1)
    pix, mag = _worst(alb_err)
    checks.append(CheckResult("albedo_in_range", mag <= 0.0, pix, mag))

    rough_err = np.maximum(bundle.roughness - 1.0, ROUGHNESS_FLOOR - bundle.roughness)
    pix, mag = _worst(rough_err)
    checks.append(CheckResult("roughness_in_range", mag <= 0.0, pix, mag))

    f0_err = np.maximum(bundle.f0 - 1.0, -bundle.f0)
    pix, mag = _worst(f0_err)
    checks.append(CheckResult("f0_in_range", mag <= 0.0, pix, mag))

    any_fg = bool(fg.any())
    checks.append(CheckResult("has_foreground", any_fg, None,
                              0.0 if any_fg else 1.0))
    return Diagnostics(checks)
