"""Occurrence templates and guided focus regions.

A template is built from a single lesion annotation by mirroring it
horizontally, taking the union with the original, and dilating with a
discrete disc (radius 7 covers a 15x15 neighborhood). Guidance restricts
an importance map's focus region to the template.

Masks are (H, W) boolean arrays; the width axis is the second one, so a
horizontal flip reverses columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attribution import normalize_importance

DEFAULT_DILATION_RADIUS = 7

GUIDE_MODES = ("intersect", "renormalize")


@dataclass(frozen=True)
class TemplateSpec:
    annotation_path: str
    flip: bool = True
    dilation_radius: int = DEFAULT_DILATION_RADIUS

    def __post_init__(self):
        if self.dilation_radius < 0:
            raise ValueError(f"dilation radius must be >= 0, got {self.dilation_radius}")


def _check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.dtype != bool:
        raise ValueError(f"expected a 2-D boolean mask, got {mask.shape} {mask.dtype}")
    return mask


def hflip(mask: np.ndarray) -> np.ndarray:
    """Mirror across the vertical centerline; an involution."""
    return _check_mask(mask)[:, ::-1].copy()


def union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = _check_mask(a), _check_mask(b)
    if a.shape != b.shape:
        raise ValueError(f"mask dimensions differ: {a.shape} vs {b.shape}")
    return a | b


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation by the disc {(dw, dh): dw^2 + dh^2 <= radius^2}.

    A pixel is set iff some input pixel lies within `radius` (Euclidean)
    of it; neighbors outside the grid are ignored. radius 7 realizes a
    15x15 elliptical kernel.
    """
    mask = _check_mask(mask)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return mask.copy()
    h, w = mask.shape
    out = np.zeros_like(mask)
    r2 = radius * radius
    for dh in range(-radius, radius + 1):
        for dw in range(-radius, radius + 1):
            if dh * dh + dw * dw > r2:
                continue
            # out[y, x] |= mask[y + dh, x + dw] wherever both indices are valid
            dst_h = slice(max(0, -dh), h - max(0, dh))
            src_h = slice(max(0, dh), h + min(0, dh))
            dst_w = slice(max(0, -dw), w - max(0, dw))
            src_w = slice(max(0, dw), w + min(0, dw))
            out[dst_h, dst_w] |= mask[src_h, src_w]
    return out


def build_template(
    annotation: np.ndarray,
    radius: int = DEFAULT_DILATION_RADIUS,
    flip: bool = True,
) -> np.ndarray:
    """dilate(annotation | hflip(annotation), radius).

    With flipping enabled the result is horizontally symmetric regardless
    of the annotation. Raises on an empty annotation, which would produce
    an empty template.
    """
    annotation = _check_mask(annotation)
    if not annotation.any():
        raise ValueError("annotation is empty; template would be empty")
    merged = union(annotation, hflip(annotation)) if flip else annotation
    return dilate(merged, radius)


def extract_focus(importance: np.ndarray, vstar: float) -> np.ndarray:
    """Pixels whose max-normalized importance reaches the cutoff vstar."""
    if not 0 < vstar <= 1:
        raise ValueError(f"vstar must be in (0, 1], got {vstar}")
    return normalize_importance(importance) >= vstar


def guide(
    importance: np.ndarray,
    template: np.ndarray,
    vstar: float,
    mode: str = "intersect",
) -> np.ndarray:
    """Template-guided focus region.

    "intersect" (default): threshold the unmasked map, then keep only
    pixels inside the template. This never admits a pixel the baseline
    rejected, so when the true lesion lies inside the template the guided
    region can only match or beat the baseline overlap.

    "renormalize": zero the map outside the template first and threshold
    the renormalized product (the element-wise-product reading). The two
    differ when the global maximum falls outside the template.
    """
    importance = np.asarray(importance, dtype=float)
    template = _check_mask(template)
    if importance.shape != template.shape:
        raise ValueError(
            f"importance shape {importance.shape} does not match template {template.shape}"
        )
    if mode == "intersect":
        return extract_focus(importance, vstar) & template
    if mode == "renormalize":
        return extract_focus(importance * template, vstar)
    raise ValueError(f"unknown guide mode {mode!r} (expected one of {GUIDE_MODES})")
