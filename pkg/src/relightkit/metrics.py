"""Evaluation metrics and the weighted training loss.

Includes masked L1 (mean absolute error over the masked-out region only),
a specular-weighted L1, plain MAE/MSE, luminance SSIM, the log radiance
codec used at export time, and the 13-term weighted composite loss with its
fixed coefficient table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .masks import Mask
from .utils import luminance

# Coefficient table for the composite training loss.  The heavy geometry and
# source-light terms carry 10x, reconstruction terms 0.2x, perceptual and
# adversarial terms 1x.  An all-ones probe therefore totals 27.0.
LOSS_WEIGHTS: dict[str, float] = {
    "normal": 10.0,
    "src_hdri": 10.0,
    "src_diffuse": 0.2,
    "albedo": 0.2,
    "pbr": 0.2,
    "neural": 0.2,
    "vgg_src_diffuse": 1.0,
    "vgg_albedo": 1.0,
    "vgg_pbr": 1.0,
    "vgg_neural": 1.0,
    "adv_pbr": 1.0,
    "adv_neural": 1.0,
    "spec_neural": 0.2,
}


@dataclass
class LossReport:
    """Raw terms, their weighted values, and the scalar total."""

    terms: dict[str, float]
    weighted: dict[str, float]
    total: float


def composite_loss(terms: dict[str, float]) -> LossReport:
    """Combine the named loss terms with the fixed weight table.

    Every key in LOSS_WEIGHTS must be present (missing or unknown keys are
    errors); the total is the correctly-rounded sum of the weighted terms,
    so an all-ones probe returns exactly 27.0.
    """
    missing = [k for k in LOSS_WEIGHTS if k not in terms]
    if missing:
        raise ValueError(f"missing loss terms: {missing}")
    unknown = [k for k in terms if k not in LOSS_WEIGHTS]
    if unknown:
        raise ValueError(f"unknown loss terms: {unknown}")
    weighted = {k: LOSS_WEIGHTS[k] * float(terms[k]) for k in LOSS_WEIGHTS}
    total = math.fsum(weighted[k] for k in LOSS_WEIGHTS)
    return LossReport(terms={k: float(terms[k]) for k in LOSS_WEIGHTS},
                      weighted=weighted, total=total)


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    return x, y


def l1(x, y, mask: Mask | np.ndarray | None = None) -> float:
    """Mean absolute error; with a mask, averaged over the masked-out
    (hidden) region only."""
    x, y = _pair(x, y)
    diff = np.abs(x - y)
    if mask is None:
        return float(diff.mean())
    m = mask.data if isinstance(mask, Mask) else np.asarray(mask) != 0
    if m.shape != x.shape[:2]:
        raise ValueError(f"mask {m.shape} does not fit images {x.shape}")
    if not np.any(m):
        raise ValueError("mask selects no pixels")
    sel = diff[m] if x.ndim == 2 else diff[m, :]
    return float(sel.mean())


def specular_weighted_l1(x, y, weight) -> float:
    """L1 between specular-weighted images: mean |x * w - y * w|."""
    x, y = _pair(x, y)
    w = np.asarray(weight, dtype=np.float64)
    if w.shape == x.shape[:2] and x.ndim == 3:
        w = w[..., None]
    return float(np.abs(x * w - y * w).mean())


def mae(x, y) -> float:
    x, y = _pair(x, y)
    return float(np.abs(x - y).mean())


def mse(x, y) -> float:
    x, y = _pair(x, y)
    d = x - y
    return float((d * d).mean())


def _gaussian_kernel(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a 1-D kernel."""
    from numpy.lib.stride_tricks import sliding_window_view
    out = sliding_window_view(img, len(k), axis=0) @ k
    out = sliding_window_view(out, len(k), axis=1) @ k
    return out


def ssim(x, y, data_range: float = 1.0, k1: float = 0.01, k2: float = 0.03,
         window: int = 11, sigma: float = 1.5) -> float:
    """Mean structural similarity on luminance.

    Gaussian-weighted local statistics (11x11 window, sigma 1.5 by default),
    valid-mode so image borders are cropped, stabilizers C1 = (k1 L)^2 and
    C2 = (k2 L)^2 for dynamic range L.  Identical images score exactly 1.
    """
    x, y = _pair(x, y)
    gx = luminance(x)
    gy = luminance(y)
    if gx.ndim != 2:
        raise ValueError(f"ssim expects 2-D or (H, W, 3) images, got {x.shape}")
    if gx.shape[0] < window or gx.shape[1] < window:
        raise ValueError(f"images smaller than the {window}x{window} ssim window")
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")

    k = _gaussian_kernel(window, sigma)
    mu_x = _filter_valid(gx, k)
    mu_y = _filter_valid(gy, k)
    xx = _filter_valid(gx * gx, k)
    yy = _filter_valid(gy * gy, k)
    xy = _filter_valid(gx * gy, k)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float((num / den).mean())


def log_encode(x) -> np.ndarray:
    """HDR -> storage transform log(1 + x); input must be non-negative."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0):
        raise ValueError("log_encode expects non-negative linear radiance")
    return np.log1p(x)


def log_decode(y) -> np.ndarray:
    """Inverse of log_encode: exp(y) - 1; input must be non-negative."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0.0):
        raise ValueError("log_decode expects non-negative encoded values")
    return np.expm1(y)
