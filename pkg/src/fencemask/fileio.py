"""Image, annotation and report files.

Images are read as PNG or JPEG and always written as PNG. Annotations use
a minimal COCO subset: top-level ``images`` (id, file_name, width, height)
and ``annotations`` (image_id, bbox as ``[x, y, w, h]``). Every file is
written through a temp file and ``os.replace`` so an interrupted run never
leaves a partial output behind.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from fencemask.analysis import BBox, Corpus, CorpusImage
from fencemask.pipeline import as_image

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
JPEG_MAGIC = b"\xff\xd8\xff"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


class FenceMaskIOError(Exception):
    pass


class ImageError(FenceMaskIOError):
    pass


class ImageNotFoundError(ImageError, FileNotFoundError):
    pass


class UnsupportedFormatError(ImageError):
    pass


class CorruptImageError(ImageError):
    pass


class UnwritableError(FenceMaskIOError, OSError):
    pass


class AnnotationError(FenceMaskIOError):
    pass


class AnnotationNotFoundError(AnnotationError, FileNotFoundError):
    pass


class MalformedAnnotationError(AnnotationError):
    """Not valid JSON, or missing required structure."""


class UnknownImageError(AnnotationError):
    """An annotation names an image id that the file does not define."""


class InvalidBBoxError(AnnotationError):
    pass


# -- atomic writes ----------------------------------------------------------

def atomic_write_bytes(path, data):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    except OSError as e:
        raise UnwritableError(f"{path}: cannot write: {e}") from e
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException as e:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        if isinstance(e, OSError):
            raise UnwritableError(f"{path}: cannot write: {e}") from e
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


# -- images -----------------------------------------------------------------

def load_image(path):
    """Decode a PNG or JPEG into a uint8 array of shape (H, W, 1) or (H, W, 3)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise ImageNotFoundError(f"{path}: no such file") from None
    except IsADirectoryError:
        raise ImageNotFoundError(f"{path}: is a directory") from None
    if not (data.startswith(PNG_MAGIC) or data.startswith(JPEG_MAGIC)):
        raise UnsupportedFormatError(f"{path}: not a PNG or JPEG file")
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            return _to_array(im)
    except (OSError, SyntaxError, ValueError, UnidentifiedImageError) as e:
        raise CorruptImageError(f"{path}: corrupt image data: {e}") from e


def _to_array(im):
    if im.mode in ("I;16", "I;16B", "I;16L", "I"):
        arr = np.asarray(im)
        if arr.dtype != np.uint8:
            arr = (np.clip(arr, 0, 65535).astype(np.uint32) >> 8).astype(np.uint8)
        return arr[:, :, None]
    if im.mode in ("1", "L", "LA"):
        return np.asarray(im.convert("L"), dtype=np.uint8)[:, :, None]
    return np.asarray(im.convert("RGB"), dtype=np.uint8)


def encode_png(image):
    image = as_image(image)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(image)).save(buf, format="PNG")
    return buf.getvalue()


def save_image(image, path):
    """Write ``image`` as a lossless PNG."""
    atomic_write_bytes(path, encode_png(image))


def list_images(directory):
    """Image files under ``directory``, sorted by relative POSIX path."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory}: not a directory")
    found = [p for p in directory.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(found, key=lambda p: p.relative_to(directory).as_posix())


# -- annotations ------------------------------------------------------------

@dataclass(frozen=True)
class ImageInfo:
    image_id: int
    file_name: str
    width: int
    height: int


@dataclass
class Annotations(Mapping):
    """Boxes per image id. ``n_clamped`` counts boxes cut at the image border."""

    images: dict
    boxes: dict
    n_clamped: int = 0
    n_dropped: int = 0

    def __getitem__(self, image_id):
        return self.boxes[image_id]

    def __iter__(self):
        return iter(self.boxes)

    def __len__(self):
        return len(self.boxes)

    def to_corpus(self, images_dir=None):
        images = []
        for image_id in sorted(self.images):
            info = self.images[image_id]
            if images_dir is not None and not (Path(images_dir) / info.file_name).is_file():
                raise ImageNotFoundError(f"{Path(images_dir) / info.file_name}: image {image_id} not found")
            images.append(CorpusImage(image_id, info.width, info.height, tuple(self.boxes[image_id]),
                                      info.file_name))
        return Corpus(tuple(images))


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _clamp_box(bbox, info, where):
    if not isinstance(bbox, list) or len(bbox) != 4 or not all(_number(v) for v in bbox):
        raise InvalidBBoxError(f"{where}: bbox must be four numbers [x, y, w, h], got {bbox!r}")
    x, y, w, h = bbox
    if w < 0 or h < 0:
        raise InvalidBBoxError(f"{where}: negative bbox size {bbox!r}")
    x0, y0 = math.floor(x), math.floor(y)
    x1, y1 = math.ceil(x + w), math.ceil(y + h)
    cx0, cy0 = max(x0, 0), max(y0, 0)
    cx1, cy1 = min(x1, info.width), min(y1, info.height)
    clamped = (cx0, cy0, cx1, cy1) != (x0, y0, x1, y1)
    return (cx0, cy0, cx1 - cx0, cy1 - cy0), clamped


def load_annotations(path):
    """Parse a COCO-subset annotation file; unknown keys are ignored."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise AnnotationNotFoundError(f"{path}: no such file") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedAnnotationError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from e
    if not isinstance(doc, dict):
        raise MalformedAnnotationError(f"{path}: top level must be an object")
    raw_images, raw_anns = doc.get("images", []), doc.get("annotations", [])
    if not isinstance(raw_images, list) or not isinstance(raw_anns, list):
        raise MalformedAnnotationError(f"{path}: 'images' and 'annotations' must be arrays")

    images = {}
    for i, im in enumerate(raw_images):
        where = f"{path}: images[{i}]"
        try:
            info = ImageInfo(im["id"], str(im["file_name"]), im["width"], im["height"])
        except (KeyError, TypeError):
            raise MalformedAnnotationError(f"{where}: needs id, file_name, width and height") from None
        if not (isinstance(info.width, int) and isinstance(info.height, int)) or info.width < 1 or info.height < 1:
            raise MalformedAnnotationError(f"{where}: width and height must be positive integers")
        if info.image_id in images:
            raise MalformedAnnotationError(f"{where}: duplicate image id {info.image_id!r}")
        images[info.image_id] = info

    boxes = {image_id: [] for image_id in images}
    n_clamped = n_dropped = 0
    for i, ann in enumerate(raw_anns):
        where = f"{path}: annotations[{i}]"
        if not isinstance(ann, dict) or "image_id" not in ann or "bbox" not in ann:
            raise MalformedAnnotationError(f"{where}: needs image_id and bbox")
        info = images.get(ann["image_id"])
        if info is None:
            raise UnknownImageError(f"{where}: unknown image id {ann['image_id']!r}")
        (x, y, w, h), clamped = _clamp_box(ann["bbox"], info, where)
        n_clamped += clamped
        if w < 1 or h < 1:
            n_dropped += 1
            continue
        label = ann.get("category_id")
        boxes[info.image_id].append(BBox(x, y, w, h, None if label is None else str(label)))
    return Annotations(images, boxes, n_clamped, n_dropped)


# -- reports ----------------------------------------------------------------

REPORT_COLUMNS = [
    "method", "global_occlusion", "mean_object_occlusion", "mean_object_max_occlusion",
    "failure_threshold", "failure_rate", "n_images", "n_objects", "seeds",
]


def report_csv(reports):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.summary().items()})
    return buf.getvalue()


def report_json(reports, **meta):
    return json.dumps({**meta, "reports": [r.to_dict() for r in reports]}, indent=2, sort_keys=True) + "\n"


def read_report_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
