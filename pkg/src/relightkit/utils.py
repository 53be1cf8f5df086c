"""Small shared helpers: vector normalization, clamping, luminance."""

from __future__ import annotations

import numpy as np

# Rec. 709 luma coefficients, used wherever a scalar intensity is needed.
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

# Camera/view direction for the orthographic renderer: +Z points from the
# surface toward the camera.
VIEW_DIR = np.array([0.0, 0.0, 1.0])


def clamp01(x):
    """Clamp to [0, 1]; the bracket operator used on every dot product."""
    return np.clip(x, 0.0, 1.0)


def normalize(v: np.ndarray, eps: float = 1e-20) -> np.ndarray:
    """Normalize vectors along the last axis, guarding the zero vector."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.maximum(n, eps)


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dot product along the last axis (unclamped)."""
    return np.sum(np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64), axis=-1)


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 709 luminance of an (..., 3) image; grayscale passes through."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim >= 1 and img.shape[-1] == 3:
        return img @ LUMA_WEIGHTS
    return img
