"""Fixed-weight eight-direction gradient bank with linear and square encodings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._sse_numpy import DIRECTIONS
from .core import DimensionMismatch, GradConfig, validate_image


@dataclass(frozen=True)
class GradientFeatures:
    """Fused map plus its encodings, ``channels`` shaped ``(C, H, W)``."""

    names: tuple[str, ...]
    channels: np.ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[self.names.index(name)]


def directional_diffs(img, dilation: int = 1) -> np.ndarray:
    """``g[k](p) = I(p + dilation * dir_k) - I(p)`` with clamp-to-edge lookups.

    Returns shape ``(8, H, W)``, directions clockwise from east.
    """
    if dilation < 1:
        raise ValueError("dilation must be >= 1")
    arr = validate_image(img)
    h, w = arr.shape
    rows = np.arange(h)
    cols = np.arange(w)
    out = np.empty((8, h, w))
    for k, (dx, dy) in enumerate(DIRECTIONS):
        ny = np.clip(rows + dilation * dy, 0, h - 1)
        nx = np.clip(cols + dilation * dx, 0, w - 1)
        out[k] = arr[np.ix_(ny, nx)] - arr
    return out


def fuse(diffs, weights) -> np.ndarray:
    diffs = np.asarray(diffs, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if diffs.ndim != 3 or diffs.shape[0] != 8 or weights.shape != (8,):
        raise DimensionMismatch(
            f"need 8 maps of equal shape and 8 weights, got {diffs.shape} and {weights.shape}"
        )
    return np.tensordot(weights, diffs, axes=1)


def equivalent_kernel(weights, dilation: int = 1) -> np.ndarray:
    """Single dilated 3x3 correlation kernel: neighbours ``W_k``, centre ``-sum(W)``."""
    size = 2 * dilation + 1
    kernel = np.zeros((size, size))
    for wk, (dx, dy) in zip(weights, DIRECTIONS):
        kernel[dilation + dilation * dy, dilation + dilation * dx] = wk
    kernel[dilation, dilation] = -float(np.sum(weights))
    return kernel


def gradient_features(img, cfg: GradConfig | None = None) -> GradientFeatures:
    cfg = cfg or GradConfig()
    fused = fuse(directional_diffs(img, cfg.dilation), cfg.weights)
    names = ["fused"]
    channels = [fused]
    if "linear" in cfg.encodings:
        names.append("linear")
        channels.append(fused)
    if "square" in cfg.encodings:
        names.append("square")
        channels.append(fused * fused)
    return GradientFeatures(names=tuple(names), channels=np.stack(channels))
