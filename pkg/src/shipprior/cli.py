"""Command-line interface.

Subcommands: sse, gradmap, trimap, detect, eval, schedule, augment.

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
``SHIPPRIOR_WORKERS`` sets the default ``--workers``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import io
from .augment import AffineParams, apply_affine, mixup, mosaic, plan_epoch, schedule_ratio
from .core import (
    DetectConfig,
    EncodedPrior,
    GradConfig,
    ScheduleConfig,
    SseConfig,
    ShipPriorError,
    normalize_scores,
)
from .detect import detect_pipeline
from .evaluation import coco_metrics
from .gradbank import gradient_features
from .sse import encode_prior, sse_extract, sse_multi_scale
from .trimap import build_trimap

logger = logging.getLogger("shipprior")

WORKERS_ENV = "SHIPPRIOR_WORKERS"


class InvariantViolation(RuntimeError):
    """Raised when an output fails a post-condition check."""


# --- shared plumbing ---------------------------------------------------------

def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def common_options(f):
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON config file; flags override its values.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")(f)
    f = click.option("--workers", type=click.IntRange(min=1), default=_default_workers,
                     help=f"Worker processes (default ${WORKERS_ENV} or 1).")(f)
    return f


def sse_options(f):
    f = click.option("--scales", default=None, help="Comma-separated patch edges, e.g. 1,2,3.")(f)
    f = click.option("--alpha1", type=int, default=None)(f)
    f = click.option("--alpha2", type=int, default=None)(f)
    f = click.option("--epsilon", type=float, default=None)(f)
    f = click.option("--q-max", "q_max", type=int, default=None)(f)
    f = click.option("--backend", type=click.Choice(["compiled", "numpy"]), default=None,
                     help="Prior kernel backend (default: compiled when built).")(f)
    return f


def _load_config(path) -> dict:
    return io.read_json(path) if path else {}


def _section(config: dict, name: str, **overrides) -> dict:
    merged = dict(config.get(name, {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


def _int_list(text):
    return None if text is None else tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text):
    return None if text is None else tuple(float(v) for v in text.split(",") if v.strip())


def _sse_config(config, scales, alpha1, alpha2, epsilon, q_max) -> SseConfig:
    sec = _section(config, "sse", scales=_int_list(scales), alpha1=alpha1, alpha2=alpha2,
                   epsilon=epsilon, q_max=q_max)
    return SseConfig(**sec)


def _config_dict(**sections) -> dict:
    out = {}
    for name, value in sections.items():
        out[name] = dataclasses.asdict(value) if dataclasses.is_dataclass(value) else value
    return json.loads(json.dumps(out))


def _echo_config(out_dir: Path, doc: dict) -> None:
    io.write_json(out_dir / "config.json", doc)


def _pmap(func, jobs, workers: int):
    """Ordered map; results never depend on ``workers``."""
    if workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(func, jobs))


# --- sse ---------------------------------------------------------------------

def _sse_job(job):
    path, out_dir, cfg, backend = job
    start = time.perf_counter()
    img, depth = io.read_gray(path)
    prior = sse_multi_scale(img, cfg.scales, cfg.epsilon, backend=backend)
    enc = encode_prior(prior, img, cfg)
    stem = Path(path).stem
    io.write_prior(Path(out_dir) / f"{stem}_prior.png", prior, cfg.q_max)
    io.write_encoded(Path(out_dir) / f"{stem}_encoded.png", enc, depth)
    return str(path), time.perf_counter() - start


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    """Scene-prior maps, supervision masks and detection evaluation for infrared imagery."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command("sse")
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@sse_options
@common_options
def cmd_sse(inputs, out_dir, scales, alpha1, alpha2, epsilon, q_max, backend, workers, seed, config_path):
    """Write the 16-bit raw prior and the (I, low, high) encoded raster per image."""
    cfg = _sse_config(_load_config(config_path), scales, alpha1, alpha2, epsilon, q_max)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = io.list_rasters(inputs)
    results = _pmap(_sse_job, [(p, out, cfg, backend) for p in paths], workers)
    for path, seconds in results:
        click.echo(f"{path}: {seconds * 1000:.1f} ms", err=True)
    _echo_config(out, _config_dict(sse=cfg))


# --- gradmap -----------------------------------------------------------------

def _grad_job(job):
    path, out_dir, cfg = job
    img, _ = io.read_gray(path)
    feats = gradient_features(img, cfg)
    io.write_multiframe(Path(out_dir) / f"{Path(path).stem}_grad.tiff", feats.channels)
    return str(path), list(feats.names)


@cli.command("gradmap")
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--weights", default=None, help="8 comma-separated weights, clockwise from east.")
@click.option("--dilation", type=int, default=None)
@click.option("--encodings", default=None, help="Subset of linear,square.")
@common_options
def cmd_gradmap(inputs, out_dir, weights, dilation, encodings, workers, seed, config_path):
    """Write fused / linear / square gradient channels as multi-page float TIFF."""
    sec = _section(_load_config(config_path), "grad", weights=_float_list(weights), dilation=dilation,
                   encodings=None if encodings is None else tuple(e.strip() for e in encodings.split(",")))
    cfg = GradConfig(**sec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = _pmap(_grad_job, [(p, out, cfg) for p in io.list_rasters(inputs)], workers)
    names = results[0][1] if results else []
    _echo_config(out, _config_dict(grad=cfg, channels=names))


# --- trimap ------------------------------------------------------------------

def _find_mask(mask_dir, stem):
    if mask_dir is None:
        return None
    for suffix in io.RASTER_SUFFIXES:
        cand = Path(mask_dir) / f"{stem}{suffix}"
        if cand.exists():
            return cand
    return None


@cli.command("trimap")
@click.argument("annotations", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--masks", "mask_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory of scene masks named after each image file (0 sea, 1 land, 2 cloud).")
@click.option("--k", type=float, default=None, help="Box expansion factor (default 2).")
@common_options
def cmd_trimap(annotations, out_dir, mask_dir, k, workers, seed, config_path):
    """Indexed trimap per annotated image: 0 unknown, 1 positive, 2 negative."""
    sec = _section(_load_config(config_path), "trimap", k=k)
    k = float(sec.get("k", 2.0))
    images, anns = io.load_annotations(annotations)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rec in images:
        shape = (rec["height"], rec["width"])
        stem = Path(rec["file"]).stem
        mask_path = _find_mask(mask_dir, stem)
        scene = io.read_scene_mask(mask_path, shape) if mask_path else None
        own = [a for a in anns if a.image_id == rec["id"]]
        tri = build_trimap(own, scene, k, shape)
        io.write_indexed(out / f"{stem}_trimap.png", tri)
    _echo_config(out, _config_dict(trimap={"k": k}))


# --- detect ------------------------------------------------------------------

def _detect_job(job):
    path, image_id, mask_path, sse_cfg, det_cfg, backend = job
    img, _ = io.read_gray(path)
    scene = io.read_scene_mask(mask_path, img.shape) if mask_path else None
    return detect_pipeline(img, sse_cfg, det_cfg, scene, image_id=image_id, backend=backend)


@cli.command("detect")
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--mask", "mask", type=click.Path(exists=True), default=None,
              help="Scene mask file (single image) or directory of masks named after images.")
@click.option("--annotations", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Annotation file used to map image files to ids (default: file stem).")
@click.option("--threshold-mode", type=click.Choice(["fixed", "percentile", "otsu"]), default=None)
@click.option("--threshold", type=float, default=None, help="Fixed cut or percentile.")
@click.option("--min-area", type=int, default=None)
@click.option("--connectivity", type=click.Choice(["4", "8"]), default=None)
@click.option("--scene-filter/--no-scene-filter", "scene_filtering", default=None)
@sse_options
@common_options
def cmd_detect(inputs, out_path, mask, annotations, threshold_mode, threshold, min_area, connectivity,
               scene_filtering, scales, alpha1, alpha2, epsilon, q_max, backend, workers, seed,
               config_path):
    """Threshold the prior map, box its components and drop land/cloud candidates."""
    config = _load_config(config_path)
    sse_cfg = _sse_config(config, scales, alpha1, alpha2, epsilon, q_max)
    det_cfg = DetectConfig(**_section(
        config, "detect", threshold_mode=threshold_mode, threshold=threshold, min_area=min_area,
        connectivity=None if connectivity is None else int(connectivity),
        scene_filtering=scene_filtering))
    paths = io.list_rasters(inputs)
    ids = {}
    if annotations:
        images, _ = io.load_annotations(annotations)
        ids = {Path(rec["file"]).name: rec["id"] for rec in images}
    jobs = []
    for p in paths:
        if mask is None:
            mask_path = None
        elif Path(mask).is_dir():
            mask_path = _find_mask(mask, p.stem)
        elif len(paths) == 1:
            mask_path = Path(mask)
        else:
            raise click.UsageError("--mask must be a directory when detecting on several images")
        jobs.append((p, ids.get(p.name, p.stem), mask_path, sse_cfg, det_cfg, backend))
    dets = [d for chunk in _pmap(_detect_job, jobs, workers) for d in chunk]
    if dets:
        dets = normalize_scores(dets)
    doc = io.detections_doc(dets)
    io.validate_json(doc, "detections")
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_json(out, doc)
    io.write_json(out.with_name(out.name + ".config.json"), _config_dict(sse=sse_cfg, detect=det_cfg))
    click.echo(f"{len(dets)} detections -> {out}", err=True)


# --- eval --------------------------------------------------------------------

@cli.command("eval")
@click.argument("detections", type=click.Path(exists=True, dir_okay=False))
@click.argument("annotations", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Metrics JSON path (default: stdout).")
@click.option("--curves/--no-curves", default=True, show_default=True, help="Include PR curves.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Also write PR-curve points as CSV.")
@common_options
def cmd_eval(detections, annotations, out_path, curves, csv_path, workers, seed, config_path):
    """COCO-style AP metrics of a detection file against an annotation file."""
    dets = io.load_detections(detections)
    images, gts = io.load_annotations(annotations)
    report = coco_metrics(dets, gts, image_ids=[rec["id"] for rec in images])
    doc = report.to_dict(include_curves=curves)
    try:
        io.validate_json(doc, "metrics")
    except io.SchemaError as exc:
        raise InvariantViolation(f"metrics output failed its schema: {exc}") from exc
    text = json.dumps(doc, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        click.echo(text, nl=False)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iou", "rank", "recall", "precision"])
            for key, curve in report.pr_curves.items():
                for rank, (r, p) in enumerate(zip(curve["recall"], curve["precision"]), start=1):
                    writer.writerow([key, rank, repr(r), repr(p)])


# --- schedule ----------------------------------------------------------------

@cli.command("schedule")
@click.option("--beta", type=float, default=None, help="Decay strength in (0, 1) (default 0.8).")
@click.option("--epochs", type=int, default=None, help="Total epochs M (default 150).")
@click.option("--samples", type=click.IntRange(min=1), default=1000, show_default=True,
              help="Dataset size used for the per-epoch count.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="CSV path (default: stdout).")
@common_options
def cmd_schedule(beta, epochs, samples, out_path, workers, seed, config_path):
    """Per-epoch augmented ratio R and augmented-sample count."""
    sec = _section(_load_config(config_path), "schedule", beta=beta, total_epochs=epochs)
    cfg = ScheduleConfig(**sec)
    rows = []
    for m in range(cfg.total_epochs + 1):
        plan = plan_epoch(m, samples, cfg, seed)
        if plan.ratio != schedule_ratio(m, cfg) or plan.count != sum(plan.flags):
            raise InvariantViolation(f"epoch {m}: plan disagrees with the schedule")
        rows.append((m, repr(plan.ratio), plan.count))
    fh = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "ratio", "count"])
        writer.writerows(rows)
    finally:
        if out_path:
            fh.close()


# --- augment -----------------------------------------------------------------

def _write_like(path, arr, depth):
    if depth == 16:
        io.write_gray16(path, np.clip(np.floor(arr + 0.5), 0, 65535))
    else:
        io.write_gray8(path, arr)


@cli.command("augment")
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--op", type=click.Choice(["affine", "mosaic", "mixup"]), required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--annotations", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--lambda", "lam", type=click.FloatRange(0, 1), default=None,
              help="MixUp weight of the first image (default: drawn from the seed).")
@click.option("--order", type=click.Choice(["augment-then-sse", "sse-then-augment", "none"]),
              default="augment-then-sse", show_default=True,
              help="Whether and when to compute the encoded prior.")
@sse_options
@common_options
def cmd_augment(inputs, op, out_dir, annotations, lam, order, scales, alpha1, alpha2, epsilon, q_max,
                backend, workers, seed, config_path):
    """Apply one augmentation op; writes image, annotations and (optionally) encoded prior."""
    cfg = _sse_config(_load_config(config_path), scales, alpha1, alpha2, epsilon, q_max)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    loaded = [io.read_gray(p) for p in inputs]
    depth = max(d for _, d in loaded)
    by_file = {}
    if annotations:
        images, anns = io.load_annotations(annotations)
        for rec in images:
            by_file[Path(rec["file"]).name] = [a for a in anns if a.image_id == rec["id"]]
    groups = [by_file.get(Path(p).name, []) for p in inputs]

    # one list of planes per input: just the image, or (I, low, high)
    if order == "sse-then-augment":
        planes = []
        for arr, _ in loaded:
            enc = sse_extract(arr, cfg, backend=backend)
            planes.append([enc.image, enc.low.astype(np.float64), enc.high.astype(np.float64)])
    else:
        planes = [[arr] for arr, _ in loaded]

    rng = np.random.default_rng(seed)
    outputs = []  # (name, planes, annotations)
    if op == "affine":
        for idx, (path, pl, anns) in enumerate(zip(inputs, planes, groups)):
            params = AffineParams.sample(np.random.default_rng([seed, idx]))
            warped = [apply_affine(p, anns, params) for p in pl]
            outputs.append((f"{Path(path).stem}_affine", [w[0] for w in warped], warped[0][1]))
    elif op == "mixup":
        if len(inputs) != 2:
            raise click.UsageError("mixup takes exactly 2 inputs")
        lam = float(rng.uniform()) if lam is None else lam
        mixed = [mixup(a, b, lam, groups[0], groups[1]) for a, b in zip(planes[0], planes[1])]
        outputs.append(("mixup", [m[0] for m in mixed], mixed[0][1]))
    else:
        if len(inputs) != 4:
            raise click.UsageError("mosaic takes exactly 4 inputs")
        h, w = planes[0][0].shape
        center = (int(rng.integers(w // 4, 3 * w // 4 + 1)), int(rng.integers(h // 4, 3 * h // 4 + 1)))
        scale_draws = [float(rng.uniform(0.5, 1.5)) for _ in range(4)]
        results = []
        for c in range(len(planes[0])):
            items = [(planes[i][c], groups[i]) for i in range(4)]
            results.append(mosaic(items, center=center, scales=scale_draws))
        outputs.append(("mosaic", [r[0] for r in results], results[0][1]))

    records, all_anns = [], []
    for name, pl, anns in outputs:
        image = pl[0]
        _write_like(out / f"{name}.png", image, depth)
        h, w = image.shape
        records.append({"id": name, "file": f"{name}.png", "width": w, "height": h})
        all_anns += [dataclasses.replace(a, image_id=name) for a in anns]
        if order == "augment-then-sse":
            io.write_encoded(out / f"{name}_encoded.png", sse_extract(image, cfg, backend=backend), depth)
        elif order == "sse-then-augment":
            low = np.clip(np.floor(pl[1] + 0.5), 0, cfg.alpha1 - 1).astype(np.int64)
            high = np.clip(np.floor(pl[2] + 0.5), 0, None).astype(np.int64)
            io.write_encoded(out / f"{name}_encoded.png", EncodedPrior(image, low, high), depth)
    io.write_json(out / "annotations.json", io.annotations_doc(records, all_anns))
    _echo_config(out, _config_dict(sse=cfg, augment={"op": op, "seed": seed, "order": order,
                                                      "lambda": lam}))


# --- entry point -------------------------------------------------------------

def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="shipprior", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (ShipPriorError, OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except InvariantViolation as exc:
        click.echo(f"internal error: {exc}", err=True)
        return 2
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
