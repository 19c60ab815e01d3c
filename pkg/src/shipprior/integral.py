"""Summed-area tables and clamped rectangle means."""

from __future__ import annotations

import numpy as np

from .core import validate_image


def build_integral(img) -> np.ndarray:
    """Return the zero-padded summed-area table of ``img``.

    ``T[j, i]`` is the sum of ``img[:j, :i]``, so ``T`` has shape
    ``(H + 1, W + 1)`` with a zero first row and column.  Accumulation is
    always float64.
    """
    arr = validate_image(img)
    h, w = arr.shape
    table = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(arr, axis=0, out=table[1:, 1:])
    np.cumsum(table[1:, 1:], axis=1, out=table[1:, 1:])
    return table


def clamp_span(start, stop, size: int):
    """Clamp the inclusive span ``[start, stop]`` into ``[0, size - 1]``.

    A span lying entirely outside the image collapses onto the nearest
    edge row/column, so the clamped span is never empty.
    """
    lo = np.clip(start, 0, size - 1)
    hi = np.clip(stop, 0, size - 1)
    return lo, hi


def box_sum(table: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> float:
    """Sum over the inclusive pixel rectangle ``[x0, x1] x [y0, y1]`` (no clamping)."""
    return float(table[y1 + 1, x1 + 1] - table[y0, x1 + 1] - table[y1 + 1, x0] + table[y0, x0])


def rect_mean(table: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> float:
    """Mean over the inclusive rectangle after clamping it to the image."""
    h, w = table.shape[0] - 1, table.shape[1] - 1
    x0, x1 = clamp_span(x0, x1, w)
    y0, y1 = clamp_span(y0, y1, h)
    count = float((x1 - x0 + 1) * (y1 - y0 + 1))
    return box_sum(table, int(x0), int(y0), int(x1), int(y1)) / count


def box_mean(table: np.ndarray, cx: int, cy: int, half: int) -> float:
    """Mean of the ``(2*half+1)``-square centred on ``(cx, cy)``, clamped to the image."""
    return rect_mean(table, cx - half, cy - half, cx + half, cy + half)


def patch_span(center, n: int):
    """Inclusive pixel span of an ``n``-pixel patch centred on ``center``.

    For even ``n`` the extra pixel lies before the centre.
    """
    start = np.asarray(center) - n // 2
    return start, start + n - 1


def patch_mean_grid(table: np.ndarray, n: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Clamped means of ``n x n`` patches centred on every ``(ys[j], xs[i])``.

    ``xs`` and ``ys`` may extend beyond the image; clamping is separable so
    the whole grid is one vectorised gather.  Returns shape
    ``(len(ys), len(xs))``.
    """
    h, w = table.shape[0] - 1, table.shape[1] - 1
    x0, x1 = clamp_span(*patch_span(xs, n), w)
    y0, y1 = clamp_span(*patch_span(ys, n), h)
    y0c, y1c = y0[:, None], y1[:, None] + 1
    x0r, x1r = x0[None, :], x1[None, :] + 1
    sums = table[y1c, x1r] - table[y0c, x1r] - table[y1c, x0r] + table[y0c, x0r]
    count = ((y1 - y0 + 1)[:, None] * (x1 - x0 + 1)[None, :]).astype(np.float64)
    return sums / count
