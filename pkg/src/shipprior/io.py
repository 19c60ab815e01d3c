"""Raster and JSON file formats.

Rasters go through Pillow: 8/16-bit grayscale PNG or PGM in; 16-bit PNG for
raw priors, 8-bit RGB PNG for encoded priors, indexed 8-bit PNG for
trimaps and scene masks, multi-page float32 TIFF for gradient channels.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np
from PIL import Image, ImageSequence

from .core import Annotation, BBox, Detection, EncodedPrior, ShipPriorError, validate_scene_mask
from .sse import quantize_prior

RASTER_SUFFIXES = (".png", ".pgm", ".tif", ".tiff")


class SchemaError(ShipPriorError, ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class RasterError(ShipPriorError, ValueError):
    pass


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("shipprior").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _json_path(error: jsonschema.ValidationError) -> str:
    out = "$"
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def validate_json(doc, schema_name: str) -> None:
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise SchemaError(_json_path(errors[0]), errors[0].message)


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


# --- rasters -----------------------------------------------------------------

def read_gray(path) -> tuple[np.ndarray, int]:
    """Read a grayscale raster; returns ``(float64 array, bit depth)``."""
    try:
        with Image.open(path) as im:
            mode = im.mode
            arr = np.array(im)
    except (OSError, ValueError) as exc:
        raise RasterError(f"cannot read {path}: {exc}") from exc
    if mode == "L":
        depth = 8
    elif mode in ("I", "I;16", "I;16B", "I;16L"):
        depth = 16
    else:
        raise RasterError(f"{path}: expected an 8/16-bit grayscale raster, got mode {mode}")
    return arr.astype(np.float64), depth


def write_gray16(path, arr) -> None:
    arr = np.asarray(arr)
    if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
        raise RasterError("16-bit raster values must lie in [0, 65535]")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def write_gray8(path, arr) -> None:
    arr = np.asarray(arr)
    Image.fromarray(np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)).save(path)


def write_indexed(path, labels) -> None:
    Image.fromarray(np.asarray(labels, dtype=np.uint8)).save(path)


def read_scene_mask(path, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr, _ = read_gray(path)
    return validate_scene_mask(arr.astype(np.int64), shape)


def write_prior(path, prior, q_max: int = 65535) -> None:
    """Raw prior as 16-bit raster of its quantized values."""
    write_gray16(path, quantize_prior(prior, min(q_max, 65535)))


def image_channel_8bit(image: np.ndarray, depth: int) -> np.ndarray:
    """Intensity channel for the 8-bit encoded raster; 16-bit inputs keep their high byte."""
    if depth == 16:
        return np.floor(image / 256.0)
    return image


def write_encoded(path, enc: EncodedPrior, depth: int = 8) -> None:
    low, high = np.asarray(enc.low), np.asarray(enc.high)
    if low.max(initial=0) > 255 or high.max(initial=0) > 255:
        raise RasterError("encoded channels exceed 8 bits; use alpha1 <= 256 and q_max / alpha2 < 256")
    img = np.clip(np.floor(image_channel_8bit(enc.image, depth) + 0.5), 0, 255)
    rgb = np.stack([img, low, high], axis=-1).astype(np.uint8)
    Image.fromarray(rgb).save(path)


def read_encoded(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im.convert("RGB"))


def write_multiframe(path, channels: np.ndarray) -> None:
    frames = [Image.fromarray(np.asarray(c, dtype=np.float32)) for c in channels]
    frames[0].save(path, save_all=True, append_images=frames[1:], compression=None)


def read_multiframe(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.stack([np.array(f) for f in ImageSequence.Iterator(im)])


def list_rasters(paths: Iterable) -> list[Path]:
    """Expand files and directories into a sorted list of raster files."""
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in RASTER_SUFFIXES))
        else:
            out.append(p)
    return out


# --- annotations / detections ------------------------------------------------

def load_annotations(path) -> tuple[list[dict], list[Annotation]]:
    doc = read_json(path)
    validate_json(doc, "annotations")
    images = [dict(rec, id=str(rec["id"])) for rec in doc["images"]]
    known = {rec["id"] for rec in images}
    anns = []
    for k, rec in enumerate(doc["annotations"]):
        image_id = str(rec["image_id"])
        if image_id not in known:
            raise SchemaError(f"$.annotations[{k}].image_id", f"unknown image id {image_id!r}")
        try:
            box = BBox(*map(float, rec["bbox"]))
        except ValueError as exc:
            raise SchemaError(f"$.annotations[{k}].bbox", str(exc)) from None
        anns.append(Annotation(image_id, box, rec.get("category", "ship")))
    return images, anns


def annotations_doc(images: Sequence[dict], anns: Sequence[Annotation]) -> dict:
    return {
        "images": [dict(rec) for rec in images],
        "annotations": [
            {"image_id": a.image_id, "bbox": a.bbox.as_list(), "category": a.category} for a in anns
        ],
    }


def load_detections(path) -> list[Detection]:
    doc = read_json(path)
    validate_json(doc, "detections")
    dets = []
    for k, rec in enumerate(doc["detections"]):
        try:
            box = BBox(*map(float, rec["bbox"]))
        except ValueError as exc:
            raise SchemaError(f"$.detections[{k}].bbox", str(exc)) from None
        dets.append(Detection(str(rec["image_id"]), box, float(rec["score"])))
    return dets


def detections_doc(dets: Sequence[Detection]) -> dict:
    return {
        "detections": [
            {"image_id": d.image_id, "bbox": d.bbox.as_list(), "score": d.score} for d in dets
        ]
    }
