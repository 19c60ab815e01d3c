"""COCO-style single-category detection metrics.

Greedy score-ordered matching per image, 101-point interpolated AP,
AP at IoU 0.5 / 0.75 / mean over 0.50:0.95, and small / medium / large
strata on box area (S < 32**2 <= M <= 96**2 < L, matched at 0.5, with
out-of-stratum boxes ignored as in pycocotools).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Annotation, BBox, Detection, UnknownImageId

logger = logging.getLogger(__name__)

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))
RECALL_LEVELS = np.arange(101) / 100.0
# recall k/n that equals a level mathematically must not miss it by an ulp
RECALL_TOL = 1e-12
SMALL_MAX = 32 ** 2
LARGE_MIN = 96 ** 2
METRIC_KEYS = ("ap50", "ap75", "ap50_95", "ap_s", "ap_m", "ap_l")


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # (x + w) - x can exceed w by an ulp
    return min(inter / (a.w * a.h + b.w * b.h - inter), 1.0)


@dataclass
class MatchResult:
    """Matching outcome.

    ``order`` lists detection indices in the order they were visited;
    ``det_tp[i]`` / ``det_gt[i]`` describe detection ``i`` (input index) and
    ``det_ignored[i]`` marks detections left out of the PR sequence (size
    strata only).  ``gt_matched[j]`` is true once GT ``j`` has been claimed.
    """

    order: list[int]
    det_tp: list[bool]
    det_gt: list[int | None]
    gt_matched: list[bool]
    det_ignored: list[bool] = field(default_factory=list)

    @property
    def tp_sequence(self) -> list[bool]:
        ignored = self.det_ignored or [False] * len(self.det_tp)
        return [self.det_tp[i] for i in self.order if not ignored[i]]

    @property
    def n_tp(self) -> int:
        return sum(self.det_tp)


def match_detections(
    dets: Sequence[Detection],
    gts: Sequence[Annotation],
    iou_thresh: float = 0.5,
    area_range: tuple[float, float] | None = None,
) -> MatchResult:
    """Greedy matching by descending score, ties broken by input position.

    Each detection claims the unclaimed GT of the same image with the
    highest IoU at or above ``iou_thresh`` (first such GT on exact ties).

    With ``area_range`` the COCO size-stratum rule applies: GTs outside the
    range are *ignored*.  A detection only falls back to an ignored GT when
    no in-range GT qualifies, and such a detection is dropped from the PR
    sequence, as is any unmatched detection whose own area is out of range.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    if area_range is None:
        gt_ignored = [False] * len(gts)
    else:
        gt_ignored = [not _in_range(g.bbox.area, area_range) for g in gts]
    by_image: dict[str, list[int]] = {}
    for j, gt in enumerate(gts):
        by_image.setdefault(gt.image_id, []).append(j)
    gt_matched = [False] * len(gts)
    det_tp = [False] * len(dets)
    det_gt: list[int | None] = [None] * len(dets)
    det_ignored = [False] * len(dets)
    for i in order:
        det = dets[i]
        candidates = [j for j in by_image.get(det.image_id, ()) if not gt_matched[j]]
        best_j = None
        for want_ignored in (False, True):
            best = iou_thresh
            for j in candidates:
                if gt_ignored[j] != want_ignored:
                    continue
                v = iou(det.bbox, gts[j].bbox)
                if v >= best and (best_j is None or v > best):
                    best, best_j = v, j
            if best_j is not None:
                break
        if best_j is not None:
            gt_matched[best_j] = True
            det_gt[i] = best_j
            if gt_ignored[best_j]:
                det_ignored[i] = True
            else:
                det_tp[i] = True
        elif area_range is not None and not _in_range(det.bbox.area, area_range):
            det_ignored[i] = True
    return MatchResult(
        order=order, det_tp=det_tp, det_gt=det_gt, gt_matched=gt_matched, det_ignored=det_ignored
    )


def pr_curve(tp_sequence: Sequence[bool], n_gt: int) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative ``(recall, precision)`` after each ranked detection."""
    tp = np.cumsum(np.asarray(tp_sequence, dtype=np.float64))
    ranks = np.arange(1, len(tp) + 1, dtype=np.float64)
    recall = tp / n_gt if n_gt > 0 else np.zeros_like(tp)
    return recall, tp / ranks if len(tp) else tp


def average_precision(matches: MatchResult | Sequence[bool], n_gt: int) -> float:
    """101-point interpolated AP.

    ``matches`` is a :class:`MatchResult` or a TP/FP flag sequence already in
    score order.  With no ground truth AP is undefined; 0.0 is returned and a
    warning logged (see :func:`ap_defined`).
    """
    seq = matches.tp_sequence if isinstance(matches, MatchResult) else list(matches)
    if n_gt <= 0:
        logger.warning("AP undefined without ground truth; reporting 0")
        return 0.0
    if not seq:
        return 0.0
    recall, precision = pr_curve(seq, n_gt)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_LEVELS - RECALL_TOL, side="left")
    sampled = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(sampled.sum() / len(RECALL_LEVELS))


def ap_defined(n_gt: int) -> bool:
    return n_gt > 0


@dataclass
class EvalReport:
    ap50: float
    ap75: float
    ap50_95: float
    ap_s: float
    ap_m: float
    ap_l: float
    pr_curves: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    undefined: list[str] = field(default_factory=list)

    def metrics(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in METRIC_KEYS}

    def to_dict(self, include_curves: bool = True) -> dict:
        out: dict = self.metrics()
        if self.undefined:
            out["undefined"] = list(self.undefined)
        if include_curves:
            out["pr_curves"] = self.pr_curves
        return out


AREA_RANGES = {
    "s": (0.0, SMALL_MAX),
    "m": (SMALL_MAX, LARGE_MIN),
    "l": (LARGE_MIN, float("inf")),
}


def _in_range(area: float, area_range: tuple[float, float]) -> bool:
    lo, hi = area_range
    if lo == 0.0:
        return area < hi
    if hi == float("inf"):
        return area > lo
    return lo <= area <= hi


def coco_metrics(
    dets: Sequence[Detection],
    gts: Sequence[Annotation],
    image_ids: Sequence[str] | None = None,
) -> EvalReport:
    """Full metric set.

    ``image_ids`` (when given) is the set of known images; any detection or
    GT referring to another id raises :class:`UnknownImageId`.
    """
    if image_ids is not None:
        known = set(image_ids)
        for rec in list(dets) + list(gts):
            if rec.image_id not in known:
                raise UnknownImageId(rec.image_id)

    curves: dict[str, dict[str, list[float]]] = {}
    per_t = []
    for t in IOU_THRESHOLDS:
        m = match_detections(dets, gts, t)
        per_t.append(average_precision(m, len(gts)))
        recall, precision = pr_curve(m.tp_sequence, len(gts))
        curves[f"{t:.2f}"] = {"recall": recall.tolist(), "precision": precision.tolist()}

    undefined = []
    if not gts:
        undefined += ["ap50", "ap75", "ap50_95"]
    strata = {}
    for key in ("s", "m", "l"):
        rng = AREA_RANGES[key]
        n_in = sum(_in_range(g.bbox.area, rng) for g in gts)
        if n_in == 0:
            undefined.append(f"ap_{key}")
            strata[key] = 0.0
            continue
        strata[key] = average_precision(match_detections(dets, gts, 0.5, rng), n_in)

    return EvalReport(
        ap50=per_t[0],
        ap75=per_t[5],
        ap50_95=float(np.mean(per_t)),
        ap_s=strata["s"],
        ap_m=strata["m"],
        ap_l=strata["l"],
        pr_curves=curves,
        undefined=undefined,
    )
