"""Positive / Negative / Unknown supervision masks from boxes and scene masks."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .core import (
    CLOUD,
    LAND,
    NEGATIVE,
    POSITIVE,
    UNKNOWN,
    Annotation,
    BBox,
    validate_scene_mask,
)


def expand_bbox(b: BBox, k: float) -> BBox:
    """Scale a box about its centre by ``k``."""
    if not k > 0:
        raise ValueError(f"expansion factor must be > 0, got {k}")
    cx, cy = b.center
    w, h = k * b.w, k * b.h
    return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


def box_pixel_span(start: float, extent: float, size: int) -> tuple[int, int]:
    """Pixel index range ``[lo, hi)`` covered by ``[start, start + extent]``.

    Pixel ``i`` occupies ``[i, i + 1)`` and is covered when its centre
    ``i + 0.5`` lies in ``(start, start + extent]``, i.e. both edges round
    half up.  Clipped to ``[0, size)``; may be empty (``lo >= hi``).
    """
    lo = max(math.floor(start + 0.5), 0)
    hi = min(math.floor(start + extent + 0.5), size)
    return lo, hi


def rasterize_box(mask: np.ndarray, b: BBox, value=True) -> None:
    h, w = mask.shape
    x0, x1 = box_pixel_span(b.x, b.w, w)
    y0, y1 = box_pixel_span(b.y, b.h, h)
    if x0 < x1 and y0 < y1:
        mask[y0:y1, x0:x1] = value


def build_trimap(
    anns: Iterable[Annotation],
    scene,
    k: float = 2.0,
    shape: tuple[int, int] | None = None,
) -> np.ndarray:
    """Indexed trimap: 0 unknown, 1 positive, 2 negative.

    Land and cloud pixels are negative; pixels under any ``k``-expanded box
    are positive and win over negative.  ``scene`` may be ``None`` (all sea),
    in which case ``shape`` is required.
    """
    if not k > 0:
        raise ValueError(f"expansion factor must be > 0, got {k}")
    if scene is None:
        if shape is None:
            raise ValueError("shape is required when no scene mask is given")
        scene = np.zeros(shape, dtype=np.uint8)
    scene = validate_scene_mask(scene, shape)
    out = np.full(scene.shape, UNKNOWN, dtype=np.uint8)
    out[(scene == LAND) | (scene == CLOUD)] = NEGATIVE
    for ann in anns:
        rasterize_box(out, expand_bbox(ann.bbox, k), POSITIVE)
    return out
