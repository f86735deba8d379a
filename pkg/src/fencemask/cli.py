"""Command-line front end.

    fencemask augment --input DIR --output DIR [method flags] --epoch K --seed S
    fencemask gallery --output DIR --method M --size WxH --sweep PARAM=a..b:step
    fencemask study --output DIR (--annotations FILE --images DIR | --synthetic) --methods LIST

Every option can also come from a JSON file given with ``--config``; flags
given on the command line override values from the file. Method parameters
go under a ``"params"`` object in the file.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fencemask.analysis import CalibrationError, CorpusError, run_failure_study, synthesize_small_object_corpus
from fencemask.baselines import METHODS
from fencemask.fileio import (
    FenceMaskIOError,
    atomic_write_bytes,
    atomic_write_text,
    list_images,
    load_annotations,
    load_image,
    report_csv,
    report_json,
    save_image,
)
from fencemask.geometry import occluded_fraction
from fencemask.pipeline import ScheduleConfig, augment
from fencemask._random import derive_rng

log = logging.getLogger("fencemask")

COMMANDS = ("augment", "gallery", "study")

# flag -> config field; each field belongs to one or more method configs
METHOD_FLAGS = {
    "w_min": float, "w_max": float, "g_min": float, "g_max": float,
    "rot_min": float, "rot_max": float,
    "side": int,
    "area_min": float, "area_max": float, "aspect_min": float, "aspect_max": float, "max_attempts": int,
    "divisions": int, "hide_prob": float,
    "period": int, "keep_ratio": float,
}

# sweep names that set a pair of bounds at once
SWEEP_ALIASES = {
    "w": ("w_min", "w_max"),
    "g": ("g_min", "g_max"),
    "rot": ("rot_min", "rot_max"),
    "area": ("area_min", "area_max"),
    "aspect": ("aspect_min", "aspect_max"),
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    output: str | None = None
    input: str | None = None
    images: str | None = None
    annotations: str | None = None
    method: str = "fencemask"
    methods: tuple = tuple(METHODS)
    params: dict = field(default_factory=dict)
    max_prob: float = 1.0
    max_epoch: int = 1
    epoch: int | None = None
    seed: int = 0
    workers: int = 1
    formats: tuple = ("csv", "json")
    size: tuple = (256, 256)
    sweep: str | None = None
    image: str | None = None
    target_occlusion: float = 0.3
    threshold: float = 0.9
    seeds: int = 100
    n_samples: int = 200
    synthetic: bool = False
    image_size: int = 512
    object_size: int = 16
    objects_per_image: int = 20
    n_images: int = 50

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.output is None:
            raise UsageError("--output is required")
        if isinstance(self.methods, str):
            self.methods = tuple(m.strip() for m in self.methods.split(",") if m.strip())
        if isinstance(self.formats, str):
            self.formats = tuple(f.strip() for f in self.formats.split(",") if f.strip())
        if isinstance(self.size, str):
            self.size = parse_size(self.size)
        self.size = tuple(self.size)
        self.params = {k: _parse_param(k, v) for k, v in self.params.items()}
        if int(self.seed) != self.seed or self.seed < 0:
            raise UsageError(f"seed must be a non-negative integer, got {self.seed}")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        for m in (self.method, *self.methods):
            if m not in METHODS:
                raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise UsageError(f"unknown report format(s): {', '.join(sorted(bad))}")
        for src in (self.input, self.images):
            if src is not None and _nested(Path(src), Path(self.output)):
                raise UsageError(f"output directory {self.output} must be distinct from input {src}")


def _nested(a, b):
    a, b = a.resolve(), b.resolve()
    return a == b or a in b.parents or b in a.parents


def parse_size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"size must look like WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise UsageError(f"size must be positive, got {text!r}")
    return w, h


def parse_fill(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(v) for v in str(text).split(","))
    except ValueError:
        raise UsageError(f"fill must be R,G,B integers, got {text!r}") from None


def _parse_param(name, value):
    if name == "fill":
        return parse_fill(value)
    kind = METHOD_FLAGS.get(name)
    if kind is None:
        raise UsageError(f"unknown method parameter {name!r}")
    return _as_int(value, name) if kind is int else float(value)


def _as_int(value, name):
    if float(value) != int(float(value)):
        raise UsageError(f"{name} must be an integer, got {value!r}")
    return int(float(value))


def parse_sweep(text):
    """``PARAM=a..b:step`` -> (PARAM, [a, a+step, ..., <= b])."""
    try:
        name, rng = text.split("=", 1)
        bounds, _, step = rng.partition(":")
        a, b = (float(v) for v in bounds.split(".."))
        step = float(step) if step else 1.0
    except ValueError:
        raise UsageError(f"sweep must look like PARAM=a..b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise UsageError(f"sweep needs a <= b and step > 0, got {text!r}")
    n = int(math.floor((b - a) / step + 1e-9))
    return name.strip(), [round(a + k * step, 10) for k in range(n + 1)]


def build_method(method, params, strict=True):
    cls = METHODS[method]
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {k: v for k, v in params.items() if k in names}
    extra = set(params) - names
    if strict and extra:
        raise UsageError(f"parameter(s) {', '.join(sorted(extra))} do not apply to {method}")
    return cls(**kwargs)


def with_param(config, name, value):
    names = SWEEP_ALIASES.get(name, (name,))
    valid = {f.name for f in dataclasses.fields(config)}
    if not set(names) <= valid or name == "fill":
        raise UsageError(f"cannot sweep {name!r} for {config.method}")
    kind = METHOD_FLAGS.get(names[0], float)
    value = _as_int(value, name) if kind is int else value
    return dataclasses.replace(config, **{n: value for n in names})


# -- commands ---------------------------------------------------------------

def _run_augment(cfg):
    if cfg.input is None:
        raise UsageError("augment needs --input")
    src, dst = Path(cfg.input), Path(cfg.output)
    files = list_images(src)
    rel_out = [f.relative_to(src).with_suffix(".png") for f in files]
    if len(set(rel_out)) != len(rel_out):
        raise UsageError("two inputs map to the same output name (e.g. a.jpg and a.png)")
    method = build_method(cfg.method, cfg.params)
    schedule = ScheduleConfig(cfg.max_prob, cfg.max_epoch)
    epoch = cfg.max_epoch if cfg.epoch is None else cfg.epoch

    def task(i):
        path = files[i]
        image = load_image(path)
        out, applied, params = augment(image, method, schedule, epoch, derive_rng(cfg.seed, i))
        if not applied and path.suffix.lower() == ".png":
            atomic_write_bytes(dst / rel_out[i], path.read_bytes())
        else:
            save_image(out, dst / rel_out[i])
        if params is not None and hasattr(params, "to_dict"):
            params = params.to_dict()
        return {
            "index": i,
            "input": path.relative_to(src).as_posix(),
            "output": rel_out[i].as_posix(),
            "method": method.method,
            "epoch": epoch,
            "applied": applied,
            "params": params,
            "seed": cfg.seed,
        }

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        records = list(pool.map(task, range(len(files))))
    atomic_write_text(dst / "manifest.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    n_applied = sum(r["applied"] for r in records)
    print(f"augmented {len(records)} images ({n_applied} masked) -> {dst}")


def _test_pattern(width, height):
    x = np.linspace(0, 255, width, dtype=np.float64)
    y = np.linspace(0, 255, height, dtype=np.float64)
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, :, 0] = x[None, :].astype(np.uint8)
    img[:, :, 1] = y[:, None].astype(np.uint8)
    img[:, :, 2] = 128
    return img


def overlay(image, mask):
    """Tint occluded pixels red at half opacity."""
    if image.ndim == 2:
        image = image[:, :, None]
    if image.shape[2] == 1:
        image = np.repeat(image, 3, axis=2)
    out = image.copy()
    hidden = ~mask.keep
    out[hidden] = ((image[hidden].astype(np.uint16) + np.array([255, 0, 0])) // 2).astype(np.uint8)
    return out


def _run_gallery(cfg):
    dst = Path(cfg.output)
    base_img = load_image(cfg.image) if cfg.image else None
    width, height = (base_img.shape[1], base_img.shape[0]) if base_img is not None else cfg.size
    if base_img is None:
        base_img = _test_pattern(width, height)
    base = build_method(cfg.method, cfg.params)
    name, values = parse_sweep(cfg.sweep) if cfg.sweep else (None, [None])
    records = []
    for i, value in enumerate(values):
        config = base if name is None else with_param(base, name, value)
        params, mask = config.generate(width, height, derive_rng(cfg.seed, i))
        stem = f"{i:03d}_{config.method}" + ("" if name is None else f"_{name}={value:g}")
        save_image(mask.keep.astype(np.uint8) * 255, dst / f"{stem}_mask.png")
        save_image(overlay(base_img, mask), dst / f"{stem}_overlay.png")
        records.append({
            "index": i,
            "stem": stem,
            "config": config.to_dict(),
            "params": params.to_dict() if hasattr(params, "to_dict") else params,
            "occluded_fraction": occluded_fraction(mask),
            "seed": cfg.seed,
        })
    atomic_write_text(dst / "gallery.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    print(f"wrote {len(records)} masks -> {dst}")


def _run_study(cfg):
    dst = Path(cfg.output)
    if cfg.synthetic:
        corpus = synthesize_small_object_corpus(cfg.image_size, cfg.object_size, cfg.objects_per_image,
                                                cfg.n_images, derive_rng(cfg.seed, 1))
    else:
        if cfg.annotations is None:
            raise UsageError("study needs --annotations (or --synthetic)")
        ann = load_annotations(cfg.annotations)
        if ann.n_clamped or ann.n_dropped:
            log.warning("%s: %d boxes clamped to image bounds, %d dropped as empty",
                        cfg.annotations, ann.n_clamped, ann.n_dropped)
        corpus = ann.to_corpus(cfg.images)
    known = {f for m in cfg.methods for f in (x.name for x in dataclasses.fields(METHODS[m]))}
    unused = set(cfg.params) - known
    if unused:
        raise UsageError(f"parameter(s) {', '.join(sorted(unused))} apply to none of {', '.join(cfg.methods)}")
    methods = [build_method(m, cfg.params, strict=False) for m in cfg.methods]
    reports = run_failure_study(corpus, methods, cfg.target_occlusion, cfg.threshold, cfg.seeds,
                                derive_rng(cfg.seed, 2), cfg.n_samples, cfg.workers)
    if "csv" in cfg.formats:
        atomic_write_text(dst / "report.csv", report_csv(reports))
    if "json" in cfg.formats:
        meta = {"target_occlusion": cfg.target_occlusion, "threshold": cfg.threshold,
                "seeds": cfg.seeds, "seed": cfg.seed, "n_samples": cfg.n_samples}
        atomic_write_text(dst / "report.json", report_json(reports, **meta))
    print(f"{'method':<16}{'global':>9}{'object':>9}{'obj max':>9}{'failure':>9}")
    for r in reports:
        print(f"{r.method:<16}{r.global_occlusion:9.4f}{r.mean_object_occlusion:9.4f}"
              f"{r.mean_object_max_occlusion:9.4f}{r.failure_rate:9.4f}")


RUNNERS = {"augment": _run_augment, "gallery": _run_gallery, "study": _run_study}


def run_command(cfg):
    """Run one command; returns the process exit status."""
    try:
        RUNNERS[cfg.command](cfg)
    except (FenceMaskIOError, CalibrationError, CorpusError, ValueError, TypeError, OSError) as e:
        print(f"fencemask {cfg.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


# -- argument parsing ---------------------------------------------------------

def _add_method_flags(p):
    g = p.add_argument_group("method parameters")
    for name, kind in METHOD_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest="param_" + name, type=kind)
    g.add_argument("--fill", dest="param_fill", type=parse_fill, help="fill value R,G,B (default 0,0,0)")


def build_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with default values for any option")
    common.add_argument("--output", help="output directory")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--workers", type=int, help="worker threads (default 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fencemask", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    aug = sub.add_parser("augment", parents=[common], argument_default=argparse.SUPPRESS,
                         help="mask every image in a directory")
    aug.add_argument("--input", help="input directory (PNG/JPEG, searched recursively)")
    aug.add_argument("--method", choices=list(METHODS))
    aug.add_argument("--max-prob", dest="max_prob", type=float)
    aug.add_argument("--max-epoch", dest="max_epoch", type=int)
    aug.add_argument("--epoch", type=int, help="epoch for the probability schedule (default max epoch)")
    _add_method_flags(aug)

    gal = sub.add_parser("gallery", parents=[common], argument_default=argparse.SUPPRESS,
                         help="write masks and overlays for a parameter sweep")
    gal.add_argument("--method", choices=list(METHODS))
    gal.add_argument("--size", type=parse_size, help="WxH (default 256x256)")
    gal.add_argument("--sweep", help="PARAM=a..b:step")
    gal.add_argument("--image", help="image to draw overlays on (default: synthetic pattern)")
    _add_method_flags(gal)

    st = sub.add_parser("study", parents=[common], argument_default=argparse.SUPPRESS,
                        help="per-object occlusion and failure rates at matched occlusion")
    st.add_argument("--images", help="image directory (checked for every annotated file)")
    st.add_argument("--annotations", help="COCO-subset JSON")
    st.add_argument("--methods", help="comma-separated method names (default: all)")
    st.add_argument("--target-occlusion", dest="target_occlusion", type=float)
    st.add_argument("--threshold", type=float, help="failure threshold (default 0.9)")
    st.add_argument("--seeds", type=int, help="masks per image per method (default 100)")
    st.add_argument("--n-samples", dest="n_samples", type=int, help="masks per calibration step (default 200)")
    st.add_argument("--formats", help="csv,json")
    st.add_argument("--synthetic", action="store_true", help="use a synthetic small-object corpus")
    st.add_argument("--image-size", dest="image_size", type=int)
    st.add_argument("--object-size", dest="object_size", type=int)
    st.add_argument("--objects-per-image", dest="objects_per_image", type=int)
    st.add_argument("--n-images", dest="n_images", type=int)
    _add_method_flags(st)
    return parser


def config_from_args(ns):
    """Merge the optional JSON config file with command-line flags."""
    values = {}
    flags = vars(ns).copy()
    command = flags.pop("command")
    flags.pop("verbose", None)
    path = flags.pop("config", None)
    if path is not None:
        try:
            values = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
        except OSError as e:
            raise UsageError(f"{path}: {e}") from None
        if not isinstance(values, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        if values.pop("command", command) != command:
            raise UsageError(f"{path}: config is for a different command")
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(values) - known
        if unknown:
            raise UsageError(f"{path}: unknown key(s) {', '.join(sorted(unknown))}")
    params = dict(values.pop("params", {}) or {})
    for key in [k for k in flags if k.startswith("param_")]:
        params[key[len("param_"):]] = flags.pop(key)
    values.update(flags)
    return RunConfig(command=command, params=params, **values)


def main(argv=None):
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        cfg = config_from_args(ns)
    except (UsageError, TypeError, ValueError) as e:
        print(f"fencemask {ns.command}: error: {e}", file=sys.stderr)
        return 2
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
