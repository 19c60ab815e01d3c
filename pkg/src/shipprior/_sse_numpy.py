"""Vectorised NumPy kernel for the single-scale prior response.

This is the fallback used when the compiled ``_sse_core`` extension is not
available.  Both kernels perform the same floating-point operations in the
same order, so their outputs are bit-identical.
"""

import numpy as np

from .integral import patch_mean_grid

# clockwise from east with y pointing down; i and i + 4 are opposites
DIRECTIONS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def single_scale(table: np.ndarray, n: int, epsilon: float) -> np.ndarray:
    h, w = table.shape[0] - 1, table.shape[1] - 1
    pad = 4 * n
    xs = np.arange(-pad, w + pad)
    ys = np.arange(-pad, h + pad)
    means = patch_mean_grid(table, n, xs, ys)

    # mean absolute difference for every block centre within 3n of the image
    bh, bw = h + 6 * n, w + 6 * n
    centre = means[n:n + bh, n:n + bw]
    acc = None
    for dx, dy in DIRECTIONS:
        nb = means[n + n * dy:n + n * dy + bh, n + n * dx:n + n * dx + bw]
        term = np.abs(centre - nb)
        acc = term if acc is None else acc + term
    variation = acc / 8.0

    centre = means[pad:pad + h, pad:pad + w]
    diffs = [
        centre - means[pad + n * dy:pad + n * dy + h, pad + n * dx:pad + n * dx + w]
        for dx, dy in DIRECTIONS
    ]
    products = np.stack([diffs[k] * diffs[k + 4] for k in range(4)])
    second = np.sort(products, axis=0)[2]

    off = 3 * n
    v_centre = variation[off:off + h, off:off + w]
    v_sum = None
    for dx, dy in DIRECTIONS:
        vb = variation[off + off * dy:off + off * dy + h, off + off * dx:off + off * dx + w]
        v_sum = vb if v_sum is None else v_sum + vb
    weight = v_centre / np.maximum(v_sum, epsilon)
    response = second * weight
    return np.where(response > 0.0, response, 0.0)
