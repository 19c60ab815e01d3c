"""Multi-scale local contrast prior weighted by background variation.

For every pixel and every scale ``n`` the analysis window is a 3x3 grid of
blocks (edge ``3n``) and each block is a 3x3 grid of ``n x n`` patches.
Within a block the centre patch mean is compared to its eight neighbours;
opposed differences are multiplied, the second largest product is kept,
and the result is scaled by how much flatter the surrounding blocks are
than the centre block.  The per-scale responses are max-pooled and then
split into low/high channels for stacking with the input image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import get_kernel
from ._sse_numpy import DIRECTIONS
from .core import EncodedPrior, SseConfig, check_same_shape, validate_image
from .integral import build_integral, patch_span, rect_mean


@dataclass(frozen=True)
class BlockStats:
    diffs: tuple[float, ...]
    variation: float


def block_stats(table: np.ndarray, block_center: tuple[int, int], n: int) -> BlockStats:
    """Patch mean differences of one block, centre patch minus neighbours.

    ``block_center`` is ``(x, y)`` and may lie outside the image; patch
    rectangles are clamped.
    """
    if n < 1:
        raise ValueError("patch edge must be >= 1")
    bx, by = block_center

    def mean_at(px, py):
        x0, x1 = patch_span(px, n)
        y0, y1 = patch_span(py, n)
        return rect_mean(table, int(x0), int(y0), int(x1), int(y1))

    centre = mean_at(bx, by)
    diffs = tuple(centre - mean_at(bx + n * dx, by + n * dy) for dx, dy in DIRECTIONS)
    return BlockStats(diffs=diffs, variation=sum(abs(d) for d in diffs) / 8.0)


def dissimilarity(diffs) -> float:
    """Second largest of the four opposed-direction products."""
    diffs = list(diffs)
    if len(diffs) != 8:
        raise ValueError(f"expected 8 differences, got {len(diffs)}")
    products = sorted((diffs[k] * diffs[k + 4] for k in range(4)), reverse=True)
    return products[1]


def background_weight(v_center: float, v_background, epsilon: float = 1e-6) -> float:
    return v_center / max(float(sum(v_background)), epsilon)


def sse_single_scale(img, n: int, epsilon: float = 1e-6, backend: str | None = None) -> np.ndarray:
    """Raw prior response at one scale, clamped at zero."""
    if n < 1:
        raise ValueError("patch edge must be >= 1")
    table = build_integral(img)
    return get_kernel(backend)(table, int(n), float(epsilon))


def sse_multi_scale(img, scales, epsilon: float = 1e-6, backend: str | None = None) -> np.ndarray:
    scales = list(scales)
    if not scales:
        raise ValueError("scales must be non-empty")
    table = build_integral(img)
    kernel = get_kernel(backend)
    out = kernel(table, int(scales[0]), float(epsilon))
    for n in scales[1:]:
        out = np.maximum(out, kernel(table, int(n), float(epsilon)))
    return out


def quantize_prior(prior: np.ndarray, q_max: int = 65535) -> np.ndarray:
    """Round-half-up of the prior saturated at ``q_max``, as int64."""
    return np.floor(np.minimum(prior, q_max) + 0.5).astype(np.int64)


def encode_prior(prior, img, cfg: SseConfig | None = None) -> EncodedPrior:
    cfg = cfg or SseConfig()
    prior = np.asarray(prior, dtype=np.float64)
    arr = validate_image(img)
    check_same_shape(prior, arr, names=("prior map", "image"))
    q = quantize_prior(prior, cfg.q_max)
    return EncodedPrior(image=arr, low=q % cfg.alpha1, high=q // cfg.alpha2)


def sse_extract(img, cfg: SseConfig | None = None, backend: str | None = None) -> EncodedPrior:
    cfg = cfg or SseConfig()
    arr = validate_image(img)
    prior = sse_multi_scale(arr, cfg.scales, cfg.epsilon, backend=backend)
    return encode_prior(prior, arr, cfg)
