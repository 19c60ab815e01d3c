"""Shared value types, error classes and configuration records.

Conventions used throughout the package:

* Images are 2D ``float64`` arrays indexed ``[y, x]``; origin top-left,
  x to the right, y downward.
* Pixel ``(i, j)`` is the unit square ``[i, i + 1) x [j, j + 1)``, so an
  image spans ``[0, W] x [0, H]`` in box coordinates.  A box
  ``(x, y, w, h)`` covers a pixel when the pixel centre ``(i + 0.5, j + 0.5)``
  lies in ``(x, x + w] x (y, y + h]``; for integer boxes that is
  ``x <= i < x + w``.  A tight hull of pixels ``x0..x1`` is therefore
  ``(x0, w = x1 - x0 + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

SCORE_EPSILON = 1e-12

# Scene mask labels
SEA = 0
LAND = 1
CLOUD = 2

# Trimap labels (raster encoding)
UNKNOWN = 0
POSITIVE = 1
NEGATIVE = 2


class ShipPriorError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ShipPriorError, ValueError):
    pass


class NonFiniteValue(ShipPriorError, ValueError):
    pass


class EmptySet(ShipPriorError, ValueError):
    pass


class EpochOutOfRange(ShipPriorError, ValueError):
    pass


class ParamOutOfRange(ShipPriorError, ValueError):
    pass


class UnknownImageId(ShipPriorError, KeyError):
    def __str__(self) -> str:
        # KeyError would print the bare repr of the id
        return f"unknown image id {self.args[0]!r}" if self.args else "unknown image id"


class InvalidConfig(ShipPriorError, ValueError):
    pass


@dataclass(frozen=True)
class GrayImage:
    """Flat row-major raster, the serialized shape of an image.

    Most functions take plain 2D arrays; use :meth:`to_array` (which
    validates) to get one.
    """

    width: int
    height: int
    data: Sequence[float]

    @classmethod
    def from_array(cls, arr) -> "GrayImage":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2D array, got shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], data=tuple(arr.ravel().tolist()))

    def to_array(self) -> np.ndarray:
        validate_image(self)
        return np.asarray(self.data, dtype=np.float64).reshape(self.height, self.width)


def validate_image(img) -> np.ndarray:
    """Check an image and return it as a 2D float64 array.

    Accepts a :class:`GrayImage` or anything ``np.asarray`` turns into a 2D
    array.  Raises :class:`DimensionMismatch` or :class:`NonFiniteValue`.
    """
    if isinstance(img, GrayImage):
        if img.width <= 0 or img.height <= 0:
            raise DimensionMismatch(f"image must be non-empty, got {img.width}x{img.height}")
        if len(img.data) != img.width * img.height:
            raise DimensionMismatch(
                f"{img.width}x{img.height} image needs {img.width * img.height} values, "
                f"got {len(img.data)}"
            )
        arr = np.asarray(img.data, dtype=np.float64).reshape(img.height, img.width)
    else:
        arr = np.asarray(img, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionMismatch(f"expected a non-empty 2D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("image contains NaN or infinite values")
    return arr


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box extent must be positive, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    def translated(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)


def bbox_area(b: BBox) -> float:
    return b.w * b.h


@dataclass(frozen=True)
class Annotation:
    image_id: str
    bbox: BBox
    category: str = "ship"


@dataclass(frozen=True)
class Detection:
    image_id: str
    bbox: BBox
    score: float

    def __post_init__(self):
        if not (math.isfinite(self.score) and self.score >= 0):
            raise ValueError(f"score must be finite and >= 0, got {self.score}")


def normalize_scores(dets: Iterable[Detection], eps: float = SCORE_EPSILON) -> list[Detection]:
    """Divide every score by the set maximum.

    Order is preserved.  An all-zero set divides by ``eps`` and stays
    all-zero.
    """
    dets = list(dets)
    if not dets:
        raise EmptySet("cannot normalize an empty detection set")
    top = max(d.score for d in dets)
    # only an all-zero set is floored; flooring tiny positive maxima would break idempotence
    top = top if top > 0 else eps
    return [replace(d, score=d.score / top) for d in dets]


@dataclass(frozen=True)
class SseConfig:
    """Prior map settings.

    ``scales`` are patch edge lengths; the analysis window at scale ``n``
    is ``9n`` pixels wide (3x3 blocks, each a 3x3 grid of ``n x n`` patches).
    """

    scales: tuple[int, ...] = (1, 2, 3)
    alpha1: int = 256
    alpha2: int = 256
    epsilon: float = 1e-6
    q_max: int = 65535

    def __post_init__(self):
        scales = tuple(int(s) for s in self.scales)
        object.__setattr__(self, "scales", scales)
        if not scales:
            raise InvalidConfig("scales must be non-empty")
        if any(s < 1 for s in scales):
            raise InvalidConfig(f"scales must be >= 1, got {scales}")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise InvalidConfig(f"scales must be strictly increasing, got {scales}")
        if self.alpha1 < 2 or self.alpha2 < 2:
            raise InvalidConfig("alpha1 and alpha2 must be >= 2")
        if not self.epsilon > 0:
            raise InvalidConfig("epsilon must be > 0")
        if self.q_max < 1:
            raise InvalidConfig("q_max must be >= 1")


ENCODINGS = ("linear", "square")


@dataclass(frozen=True)
class GradConfig:
    # E, SE, S, SW, W, NW, N, NE
    weights: tuple[float, ...] = (0.125,) * 8
    dilation: int = 1
    encodings: tuple[str, ...] = ENCODINGS

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "encodings", tuple(self.encodings))
        if len(weights) != 8 or not all(math.isfinite(w) for w in weights):
            raise InvalidConfig("weights must be 8 finite values")
        if self.dilation < 1:
            raise InvalidConfig("dilation must be >= 1")
        if not self.encodings or any(e not in ENCODINGS for e in self.encodings):
            raise InvalidConfig(f"encodings must be a non-empty subset of {ENCODINGS}")


@dataclass(frozen=True)
class ScheduleConfig:
    beta: float = 0.8
    total_epochs: int = 150

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise InvalidConfig(f"beta must lie in (0, 1), got {self.beta}")
        if self.total_epochs < 1:
            raise InvalidConfig("total_epochs must be >= 1")


@dataclass(frozen=True)
class DetectConfig:
    """Candidate detector settings.

    ``threshold_mode`` is ``"fixed"``, ``"percentile"`` or ``"otsu"``;
    ``threshold`` is the fixed cut ``t`` or the percentile ``p``.
    """

    threshold_mode: str = "otsu"
    threshold: float = 0.0
    min_area: int = 2
    connectivity: int = 8
    scene_filtering: bool = True

    def __post_init__(self):
        if self.threshold_mode not in ("fixed", "percentile", "otsu"):
            raise InvalidConfig(f"unknown threshold mode {self.threshold_mode!r}")
        if self.threshold_mode == "fixed" and not self.threshold >= 0:
            raise InvalidConfig("fixed threshold must be >= 0")
        if self.threshold_mode == "percentile" and not 0 < self.threshold < 100:
            raise InvalidConfig("percentile must lie in (0, 100)")
        if self.min_area < 1:
            raise InvalidConfig("min_area must be >= 1")
        if self.connectivity not in (4, 8):
            raise InvalidConfig("connectivity must be 4 or 8")


@dataclass(frozen=True)
class EncodedPrior:
    """Image plus the low/high split of the quantized prior."""

    image: np.ndarray
    low: np.ndarray
    high: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape

    def stack(self) -> np.ndarray:
        return np.stack([self.image, self.low, self.high], axis=-1)


def check_same_shape(*arrays, names: Sequence[str] | None = None) -> None:
    shapes = [np.shape(a) for a in arrays]
    if any(s != shapes[0] for s in shapes[1:]):
        label = ", ".join(names) if names else "inputs"
        raise DimensionMismatch(f"{label} have mismatched shapes {shapes}")


def validate_scene_mask(mask, shape: tuple[int, int] | None = None) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DimensionMismatch(f"scene mask must be 2D, got shape {mask.shape}")
    if shape is not None and mask.shape != tuple(shape):
        raise DimensionMismatch(f"scene mask shape {mask.shape} does not match image {tuple(shape)}")
    if not np.isin(mask, (SEA, LAND, CLOUD)).all():
        raise ValueError("scene mask labels must be in {0 sea, 1 land, 2 cloud}")
    return mask.astype(np.uint8, copy=False)


__all__ = [
    "Annotation",
    "BBox",
    "CLOUD",
    "DetectConfig",
    "Detection",
    "DimensionMismatch",
    "EmptySet",
    "EncodedPrior",
    "EpochOutOfRange",
    "GradConfig",
    "GrayImage",
    "InvalidConfig",
    "LAND",
    "NEGATIVE",
    "NonFiniteValue",
    "POSITIVE",
    "ParamOutOfRange",
    "SEA",
    "ScheduleConfig",
    "SseConfig",
    "ShipPriorError",
    "UNKNOWN",
    "UnknownImageId",
    "bbox_area",
    "normalize_scores",
    "validate_image",
    "validate_scene_mask",
]
