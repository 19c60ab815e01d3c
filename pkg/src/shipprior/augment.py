"""Augmentation schedule and the MixUp / Mosaic / affine operators.

All randomness comes from an explicit seed or ``numpy.random.Generator``.
Box geometry uses the package convention: pixel ``i`` is the unit interval
``[i, i + 1)`` with centre ``i + 0.5``, so in box coordinates the image
spans ``[0, W] x [0, H]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import (
    Annotation,
    BBox,
    DimensionMismatch,
    EpochOutOfRange,
    ParamOutOfRange,
    ScheduleConfig,
    validate_image,
)

TRANSLATE_RANGE = (-64.0, 64.0)
ROTATE_RANGE = (-10.0, 10.0)
SHEAR_RANGE = (-2.0, 2.0)
SCALE_RANGE = (0.5, 1.5)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def schedule_ratio(m: int, cfg: ScheduleConfig) -> float:
    """Fraction of augmented samples at epoch ``m``: ``1 - beta * (m / M) ** 2``."""
    if not 0 <= m <= cfg.total_epochs:
        raise EpochOutOfRange(f"epoch {m} outside [0, {cfg.total_epochs}]")
    return 1.0 - cfg.beta * (m / cfg.total_epochs) ** 2


@dataclass(frozen=True)
class EpochPlan:
    epoch: int
    ratio: float
    flags: tuple[bool, ...]

    @property
    def count(self) -> int:
        return sum(self.flags)


def plan_epoch(m: int, n_samples: int, cfg: ScheduleConfig, seed: int = 0) -> EpochPlan:
    """Pick exactly ``round(R * n)`` samples to augment this epoch.

    The subset comes from a shuffle seeded by ``(seed, m)``, so it changes
    from epoch to epoch but is reproducible.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    ratio = schedule_ratio(m, cfg)
    count = round_half_up(ratio * n_samples)
    chosen = np.random.default_rng([seed, m]).permutation(n_samples)[:count]
    flags = np.zeros(n_samples, dtype=bool)
    flags[chosen] = True
    return EpochPlan(epoch=m, ratio=ratio, flags=tuple(bool(f) for f in flags))


@dataclass(frozen=True)
class AffineParams:
    tx: float = 0.0
    ty: float = 0.0
    rot: float = 0.0
    shear_x: float = 0.0
    shear_y: float = 0.0
    scale: float = 1.0

    def validate(self) -> None:
        checks = (
            ("tx", self.tx, TRANSLATE_RANGE),
            ("ty", self.ty, TRANSLATE_RANGE),
            ("rot", self.rot, ROTATE_RANGE),
            ("shear_x", self.shear_x, SHEAR_RANGE),
            ("shear_y", self.shear_y, SHEAR_RANGE),
            ("scale", self.scale, SCALE_RANGE),
        )
        for name, value, (lo, hi) in checks:
            if not lo <= value <= hi:
                raise ParamOutOfRange(f"{name}={value} outside [{lo}, {hi}]")

    @classmethod
    def sample(cls, rng) -> "AffineParams":
        rng = np.random.default_rng(rng)
        return cls(
            tx=float(rng.uniform(*TRANSLATE_RANGE)),
            ty=float(rng.uniform(*TRANSLATE_RANGE)),
            rot=float(rng.uniform(*ROTATE_RANGE)),
            shear_x=float(rng.uniform(*SHEAR_RANGE)),
            shear_y=float(rng.uniform(*SHEAR_RANGE)),
            scale=float(rng.uniform(*SCALE_RANGE)),
        )

    def matrix(self, center: tuple[float, float]) -> np.ndarray:
        """3x3 forward map on ``(x, y, 1)``: scale, rotate, shear, translate about ``center``."""
        cx, cy = center
        to_origin = np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1]], dtype=np.float64)
        back = np.array([[1, 0, cx], [0, 1, cy], [0, 0, 1]], dtype=np.float64)
        s = np.diag([self.scale, self.scale, 1.0])
        a = math.radians(self.rot)
        rot = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
        shear = np.array(
            [[1, math.tan(math.radians(self.shear_x)), 0], [math.tan(math.radians(self.shear_y)), 1, 0], [0, 0, 1]]
        )
        trans = np.array([[1, 0, self.tx], [0, 1, self.ty], [0, 0, 1]], dtype=np.float64)
        return trans @ back @ shear @ rot @ s @ to_origin

    @property
    def is_identity(self) -> bool:
        return self == AffineParams()


def clip_box(b: BBox, x0: float, y0: float, x1: float, y1: float, min_size: float = 1.0) -> BBox | None:
    """Intersect with ``[x0, x1] x [y0, y1]``; ``None`` if under ``min_size`` in either extent."""
    nx0, ny0 = max(b.x, x0), max(b.y, y0)
    nx1, ny1 = min(b.x + b.w, x1), min(b.y + b.h, y1)
    if nx1 - nx0 < min_size or ny1 - ny0 < min_size:
        return None
    return BBox(nx0, ny0, nx1 - nx0, ny1 - ny0)


def _transform_box(b: BBox, mat: np.ndarray) -> tuple[float, float, float, float]:
    corners = np.array(
        [[b.x, b.y, 1], [b.x + b.w, b.y, 1], [b.x, b.y + b.h, 1], [b.x + b.w, b.y + b.h, 1]],
        dtype=np.float64,
    )
    pts = corners @ mat.T
    return pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max()


def apply_affine(img, anns: Sequence[Annotation], p: AffineParams):
    """Warp ``img`` about its centre with bilinear sampling and zero fill.

    Boxes map through their four corners; the axis-aligned hull is clipped
    to the image and dropped if it falls under 1 px.
    """
    p.validate()
    arr = validate_image(img)
    h, w = arr.shape
    if p.is_identity:
        return arr.copy(), list(anns)

    # pixel-index frame: pixel centres at integers, image centre at ((w-1)/2, (h-1)/2)
    fwd = p.matrix(((w - 1) / 2.0, (h - 1) / 2.0))
    inv = np.linalg.inv(fwd)
    # ndimage works in (row, col) order
    swap = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=np.float64)
    inv_rc = swap @ inv @ swap
    out = ndimage.affine_transform(arr, inv_rc, order=1, mode="constant", cval=0.0)

    box_mat = p.matrix((w / 2.0, h / 2.0))
    new_anns = []
    for ann in anns:
        x0, y0, x1, y1 = _transform_box(ann.bbox, box_mat)
        hull = BBox(x0, y0, x1 - x0, y1 - y0)
        clipped = clip_box(hull, 0, 0, w, h)
        if clipped is not None:
            new_anns.append(Annotation(ann.image_id, clipped, ann.category))
    return out, new_anns


def _resize(arr: np.ndarray, factor: float) -> np.ndarray:
    h, w = arr.shape
    nh, nw = max(1, round_half_up(h * factor)), max(1, round_half_up(w * factor))
    if (nh, nw) == (h, w):
        return arr.copy()
    return ndimage.zoom(arr, (nh / h, nw / w), order=1, mode="nearest", grid_mode=True)


def mosaic(
    items: Sequence[tuple],
    rng=None,
    out_shape: tuple[int, int] | None = None,
    center: tuple[float, float] | None = None,
    scales: Sequence[float] | None = None,
    image_id: str = "mosaic",
):
    """Four-image mosaic.

    ``items`` are four ``(image, annotations)`` pairs placed top-left,
    top-right, bottom-left, bottom-right.  Each image is rescaled by a factor
    in ``[0.5, 1.5]`` and anchored at the split point so its inner corner
    touches it; whatever spills past the quadrant is cropped.  ``center`` and
    ``scales`` override the random draws.
    """
    if len(items) != 4:
        raise ValueError(f"mosaic needs exactly 4 inputs, got {len(items)}")
    rng = np.random.default_rng(rng)
    arrays = [validate_image(img) for img, _ in items]
    h, w = out_shape or arrays[0].shape
    if center is None:
        cx = int(rng.integers(w // 4, 3 * w // 4 + 1))
        cy = int(rng.integers(h // 4, 3 * h // 4 + 1))
    else:
        cx, cy = int(center[0]), int(center[1])
    if scales is None:
        scales = [float(rng.uniform(*SCALE_RANGE)) for _ in range(4)]
    if len(scales) != 4 or any(not SCALE_RANGE[0] <= s <= SCALE_RANGE[1] for s in scales):
        raise ParamOutOfRange(f"mosaic scales must be 4 values in {SCALE_RANGE}")

    canvas = np.zeros((h, w), dtype=np.float64)
    quads = [(0, 0, cx, cy), (cx, 0, w, cy), (0, cy, cx, h), (cx, cy, w, h)]
    out_anns = []
    for idx, ((_, anns), arr, s, (qx0, qy0, qx1, qy1)) in enumerate(zip(items, arrays, scales, quads)):
        scaled = _resize(arr, s)
        sh, sw = scaled.shape
        # top-left of the scaled image on the canvas
        ox = qx1 - sw if idx in (0, 2) else qx0
        oy = qy1 - sh if idx in (0, 1) else qy0
        dx0, dy0 = max(ox, qx0), max(oy, qy0)
        dx1, dy1 = min(ox + sw, qx1), min(oy + sh, qy1)
        if dx0 < dx1 and dy0 < dy1:
            canvas[dy0:dy1, dx0:dx1] = scaled[dy0 - oy:dy1 - oy, dx0 - ox:dx1 - ox]
        fx, fy = sw / arr.shape[1], sh / arr.shape[0]
        for ann in anns:
            b = ann.bbox
            moved = BBox(b.x * fx + ox, b.y * fy + oy, b.w * fx, b.h * fy)
            clipped = clip_box(moved, qx0, qy0, qx1, qy1)
            if clipped is not None:
                out_anns.append(Annotation(image_id, clipped, ann.category))
    return canvas, out_anns


def mixup(a, b, lam: float, anns_a: Sequence[Annotation] = (), anns_b: Sequence[Annotation] = ()):
    """Pixelwise ``lam * a + (1 - lam) * b`` with the union of both box sets."""
    if not 0.0 <= lam <= 1.0:
        raise ParamOutOfRange(f"lambda must lie in [0, 1], got {lam}")
    a = validate_image(a)
    b = validate_image(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mixup inputs differ in shape: {a.shape} vs {b.shape}")
    return lam * a + (1.0 - lam) * b, list(anns_a) + list(anns_b)
