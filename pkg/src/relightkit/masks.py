"""Occlusion mask synthesis for masked-autoencoder style training.

Three families, all driven by a counter-based RNG (Philox) keyed on the call
seed -- no global state, identical bits on every platform:

* patch      -- overlapping random rectangles accumulated until the measured
                masked ratio lands inside the requested window,
* outpaint   -- everything outside a random interior window; the masked
                region always touches the frame border,
* free_form  -- random polyline strokes stamped with a round brush.

Mask semantics: True marks the *masked* (hidden) region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_PLACEMENT_TRIES = 100_000


@dataclass
class Mask:
    """A boolean mask plus the recipe that produced it."""

    data: np.ndarray
    kind: str
    seed: int

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {d.shape}")
        self.data = d != 0

    @property
    def ratio(self) -> float:
        return float(self.data.mean())


@dataclass
class MaskPolicy:
    """Sampling ranges; fractions are relative to min(height, width)."""

    patch_size_range: tuple[float, float] = (0.04, 0.25)
    patch_ratio_range: tuple[float, float] = (0.4, 0.8)
    outpaint_margin_range: tuple[float, float] = (0.10, 0.40)
    stroke_count_range: tuple[int, int] = (1, 8)
    stroke_width_range: tuple[float, float] = (0.02, 0.08)
    stroke_points_range: tuple[int, int] = (4, 12)
    stroke_step_range: tuple[float, float] = (0.05, 0.15)
    kind_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)  # patch, outpaint, free_form


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _check_canvas(height: int, width: int) -> None:
    if height < 1 or width < 1:
        raise ValueError(f"degenerate canvas {height}x{width}")


def _check_range(name: str, rng_pair, lo_ok: float, hi_ok: float) -> None:
    lo, hi = rng_pair
    if not (lo_ok <= lo <= hi <= hi_ok):
        raise ValueError(f"{name} must satisfy {lo_ok} <= lo <= hi <= {hi_ok}, "
                         f"got ({lo}, {hi})")


def gen_patch(height: int, width: int, seed: int,
              size_range: tuple[float, float] = MaskPolicy.patch_size_range,
              ratio_range: tuple[float, float] = MaskPolicy.patch_ratio_range) -> Mask:
    """Rectangles of side size_range x min-dim, placed uniformly at random,
    until the measured masked ratio enters ratio_range.

    Rectangle areas are capped so a placement can never overshoot the upper
    bound; a window too narrow to hit (finer than one pixel) is an error.
    """
    _check_canvas(height, width)
    _check_range("size_range", size_range, 0.0, 1.0)
    _check_range("ratio_range", ratio_range, 0.0, 1.0)
    lo, hi = ratio_range
    total = height * width
    mind = min(height, width)
    rng = _rng(seed)

    mask = np.zeros((height, width), dtype=bool)
    if lo == 0.0:
        return Mask(mask, "patch", seed)

    masked = 0
    for _ in range(MAX_PLACEMENT_TRIES):
        if masked / total >= lo:
            break
        budget = int(np.floor(hi * total)) - masked
        if budget < 1:
            raise ValueError(
                f"ratio window ({lo}, {hi}) is narrower than one pixel "
                f"on a {height}x{width} canvas")
        smin = max(1, int(round(size_range[0] * mind)))
        smax = max(smin, int(round(size_range[1] * mind)))
        rh = int(rng.integers(smin, smax + 1))
        rw = int(rng.integers(smin, smax + 1))
        if rh * rw > budget:
            # shrink the rectangle to fit the remaining budget
            f = np.sqrt(budget / (rh * rw))
            rh = max(1, int(rh * f))
            rw = max(1, int(rw * f))
            if rh * rw > budget:
                rw = max(1, budget // rh)
            if rh * rw > budget:
                rh, rw = 1, 1
        r0 = int(rng.integers(0, height - rh + 1))
        c0 = int(rng.integers(0, width - rw + 1))
        mask[r0:r0 + rh, c0:c0 + rw] = True
        masked = int(mask.sum())
    else:
        raise RuntimeError("patch placement failed to reach the ratio window")
    return Mask(mask, "patch", seed)


def gen_outpaint(height: int, width: int, seed: int,
                 margin_range: tuple[float, float] = MaskPolicy.outpaint_margin_range) -> Mask:
    """Mask everything outside a random interior window.

    Each of the four margins is an independent draw from margin_range
    (fraction of the corresponding dimension, < 0.5 per side so the window
    survives).  The masked region is the border frame, hence always
    border-connected.
    """
    _check_canvas(height, width)
    _check_range("margin_range", margin_range, 0.0, 0.5 - 1e-12)
    rng = _rng(seed)
    top = int(round(rng.uniform(*margin_range) * height))
    bottom = int(round(rng.uniform(*margin_range) * height))
    left = int(round(rng.uniform(*margin_range) * width))
    right = int(round(rng.uniform(*margin_range) * width))
    if top + bottom >= height or left + right >= width:
        raise ValueError(
            f"margins swallow the {height}x{width} canvas; enlarge it or "
            "shrink margin_range")
    mask = np.ones((height, width), dtype=bool)
    mask[top:height - bottom, left:width - right] = False
    return Mask(mask, "outpaint", seed)


def stroke_mask(height: int, width: int, points: np.ndarray, brush_width: float) -> np.ndarray:
    """Rasterize one polyline with a round brush of diameter brush_width.

    Pixels whose centers lie within brush_width / 2 of any segment are set.
    """
    _check_canvas(height, width)
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise ValueError(f"points must be (K, 2) with K >= 1, got {pts.shape}")
    if brush_width <= 0:
        raise ValueError(f"brush width must be positive, got {brush_width}")
    radius = brush_width / 2.0
    mask = np.zeros((height, width), dtype=bool)
    segs = zip(pts[:-1], pts[1:]) if pts.shape[0] > 1 else [(pts[0], pts[0])]
    for p0, p1 in segs:
        r_lo = max(0, int(np.floor(min(p0[0], p1[0]) - radius)))
        r_hi = min(height - 1, int(np.ceil(max(p0[0], p1[0]) + radius)))
        c_lo = max(0, int(np.floor(min(p0[1], p1[1]) - radius)))
        c_hi = min(width - 1, int(np.ceil(max(p0[1], p1[1]) + radius)))
        if r_lo > r_hi or c_lo > c_hi:
            continue
        rr, cc = np.meshgrid(np.arange(r_lo, r_hi + 1), np.arange(c_lo, c_hi + 1),
                             indexing="ij")
        d = np.stack([rr + 0.5, cc + 0.5], axis=-1) - p0
        seg = p1 - p0
        seg_len2 = float(seg @ seg)
        if seg_len2 > 0.0:
            t = np.clip((d @ seg) / seg_len2, 0.0, 1.0)
            d = d - t[..., None] * seg
        dist2 = np.sum(d * d, axis=-1)
        mask[r_lo:r_hi + 1, c_lo:c_hi + 1] |= dist2 <= radius * radius
    return mask


def gen_free_form(height: int, width: int, seed: int,
                  count_range: tuple[int, int] = MaskPolicy.stroke_count_range,
                  width_range: tuple[float, float] = MaskPolicy.stroke_width_range,
                  points_range: tuple[int, int] = MaskPolicy.stroke_points_range,
                  step_range: tuple[float, float] = MaskPolicy.stroke_step_range) -> Mask:
    """Random wandering brush strokes."""
    _check_canvas(height, width)
    if not (0 <= count_range[0] <= count_range[1]):
        raise ValueError(f"bad stroke count range {count_range}")
    if not (2 <= points_range[0] <= points_range[1]):
        raise ValueError(f"bad stroke points range {points_range}")
    _check_range("width_range", width_range, 0.0, 1.0)
    _check_range("step_range", step_range, 0.0, 1.0)
    rng = _rng(seed)
    mind = min(height, width)
    mask = np.zeros((height, width), dtype=bool)
    n_strokes = int(rng.integers(count_range[0], count_range[1] + 1))
    for _ in range(n_strokes):
        bw = max(1.0, rng.uniform(*width_range) * mind)
        n_pts = int(rng.integers(points_range[0], points_range[1] + 1))
        pos = np.array([rng.uniform(0, height), rng.uniform(0, width)])
        heading = rng.uniform(0.0, 2.0 * np.pi)
        pts = [pos.copy()]
        for _ in range(n_pts - 1):
            step = rng.uniform(*step_range) * mind
            heading += rng.normal(0.0, 0.6)
            pos = pos + step * np.array([np.sin(heading), np.cos(heading)])
            pos[0] = np.clip(pos[0], 0, height - 1)
            pos[1] = np.clip(pos[1], 0, width - 1)
            pts.append(pos.copy())
        mask |= stroke_mask(height, width, np.array(pts), bw)
    return Mask(mask, "free_form", seed)


def sample_mask(height: int, width: int, seed: int,
                policy: MaskPolicy | None = None) -> Mask:
    """Draw a mask kind by policy weight, then generate it with a child seed
    derived from the same stream."""
    policy = policy or MaskPolicy()
    weights = np.asarray(policy.kind_weights, dtype=np.float64)
    if weights.shape != (3,) or np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError(f"bad kind weights {policy.kind_weights}")
    rng = _rng(seed)
    kind = rng.choice(3, p=weights / weights.sum())
    child = int(rng.integers(0, 2**62))
    if kind == 0:
        return gen_patch(height, width, child,
                         policy.patch_size_range, policy.patch_ratio_range)
    if kind == 1:
        return gen_outpaint(height, width, child, policy.outpaint_margin_range)
    return gen_free_form(height, width, child, policy.stroke_count_range,
                         policy.stroke_width_range, policy.stroke_points_range,
                         policy.stroke_step_range)


def apply_mask(image: np.ndarray, mask: Mask | np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Replace the masked region with fill; unmasked pixels pass through."""
    m = mask.data if isinstance(mask, Mask) else np.asarray(mask) != 0
    img = np.asarray(image)
    if m.shape != img.shape[:2]:
        raise ValueError(f"mask {m.shape} does not fit image {img.shape}")
    sel = m[..., None] if img.ndim == 3 else m
    return np.where(sel, np.asarray(fill, dtype=img.dtype), img)
