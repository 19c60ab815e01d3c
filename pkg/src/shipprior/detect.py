"""Model-driven candidate detector on top of the prior map.

threshold -> connected components -> scored boxes -> scene filtering.
Scores are the raw prior maxima; normalisation only happens on output.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import CLOUD, LAND, BBox, DetectConfig, Detection, SseConfig, validate_scene_mask
from .sse import sse_multi_scale

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


def otsu_threshold(values: np.ndarray) -> tuple[int, np.ndarray]:
    """Otsu cut over a 256-bin histogram.

    Values are quantized to ``0..255`` relative to their maximum (round half
    up).  Returns the cut ``t`` and the quantized array; foreground is
    ``q > t``.
    """
    values = np.asarray(values, dtype=np.float64)
    q = np.floor(values / values.max() * 255 + 0.5).astype(np.int64)
    hist = np.bincount(q.ravel(), minlength=256).astype(np.float64)
    levels = np.arange(256, dtype=np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)
    w1 = total - w0
    m0 = np.cumsum(hist * levels)
    m1 = m0[-1] - m0
    valid = (w0 > 0) & (w1 > 0)
    between = np.full(256, -1.0)
    mu0 = m0[valid] / w0[valid]
    mu1 = m1[valid] / w1[valid]
    between[valid] = (w0[valid] / total) * (w1[valid] / total) * (mu0 - mu1) ** 2
    # first maximum, within rounding noise
    best = between.max()
    t = int(np.flatnonzero(between >= best - 1e-12 * max(best, 1.0))[0])
    return t, q


def threshold_map(prior, mode: str = "otsu", value: float = 0.0) -> np.ndarray:
    """Binary candidate map.

    ``fixed``: ``prior > value``.  ``percentile``: cut at the ``value``-th
    percentile of the positive responses.  ``otsu``: see
    :func:`otsu_threshold`.  An all-zero map gives an empty result in every
    mode.
    """
    prior = np.asarray(prior, dtype=np.float64)
    if mode == "fixed":
        return prior > value
    if not np.any(prior > 0):
        return np.zeros(prior.shape, dtype=bool)
    if mode == "percentile":
        cut = np.percentile(prior[prior > 0], value)
        return prior > cut
    if mode == "otsu":
        t, q = otsu_threshold(prior)
        if not np.any(q > 0) or q.min() == q.max():
            # one populated bin: nothing to separate
            return np.zeros(prior.shape, dtype=bool)
        return q > t
    raise ValueError(f"unknown threshold mode {mode!r}")


def connected_components(binary, connectivity: int = 8) -> list[np.ndarray]:
    """Pixel coordinate arrays ``(N, 2)`` of ``(y, x)``, one per component.

    Ordered by each component's first pixel in raster order, i.e. by
    ``(min y, min x of that row)``.
    """
    if connectivity not in _STRUCTURES:
        raise ValueError("connectivity must be 4 or 8")
    binary = np.asarray(binary, dtype=bool)
    labels, count = ndimage.label(binary, structure=_STRUCTURES[connectivity])
    if count == 0:
        return []
    # ndimage numbers components in raster order of their first pixel
    coords = np.argwhere(labels)
    order = np.argsort(labels[binary], kind="stable")
    coords = coords[order]
    splits = np.cumsum(np.bincount(labels[binary])[1:])[:-1]
    return np.split(coords, splits)


def components_to_detections(
    comps: Sequence[np.ndarray], prior, min_area: int = 2, image_id: str = ""
) -> list[Detection]:
    prior = np.asarray(prior, dtype=np.float64)
    dets = []
    for comp in comps:
        if len(comp) < min_area:
            continue
        ys, xs = comp[:, 0], comp[:, 1]
        x0, y0 = int(xs.min()), int(ys.min())
        box = BBox(x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1)
        dets.append(Detection(image_id=image_id, bbox=box, score=float(prior[ys, xs].max())))
    return dets


def center_pixel(b: BBox, shape: tuple[int, int]) -> tuple[int, int]:
    """``(x, y)`` index of the pixel containing the box centre, clipped."""
    cx, cy = b.center
    h, w = shape
    return min(max(int(np.floor(cx)), 0), w - 1), min(max(int(np.floor(cy)), 0), h - 1)


def scene_filter(dets: Sequence[Detection], scene) -> list[Detection]:
    """Drop detections whose centre pixel is land or cloud."""
    scene = validate_scene_mask(scene)
    kept = []
    for det in dets:
        x, y = center_pixel(det.bbox, scene.shape)
        if scene[y, x] not in (LAND, CLOUD):
            kept.append(det)
    return kept


def detect_pipeline(
    img,
    sse_cfg: SseConfig | None = None,
    det_cfg: DetectConfig | None = None,
    scene=None,
    image_id: str = "",
    backend: str | None = None,
) -> list[Detection]:
    sse_cfg = sse_cfg or SseConfig()
    det_cfg = det_cfg or DetectConfig()
    img = np.asarray(img, dtype=np.float64)
    if scene is not None:
        scene = validate_scene_mask(scene, img.shape)
    prior = sse_multi_scale(img, sse_cfg.scales, sse_cfg.epsilon, backend=backend)
    binary = threshold_map(prior, det_cfg.threshold_mode, det_cfg.threshold)
    comps = connected_components(binary, det_cfg.connectivity)
    dets = components_to_detections(comps, prior, det_cfg.min_area, image_id=image_id)
    if scene is not None and det_cfg.scene_filtering:
        dets = scene_filter(dets, scene)
    return dets
