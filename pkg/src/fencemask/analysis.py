"""Per-object occlusion statistics under matched global occlusion.

Every method is first calibrated so its masks hide the same mean fraction of
the image. Then each annotated object's occluded fraction is measured over
many seeded masks, and an object counts as a failure case for a mask when
its occluded fraction exceeds a threshold.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from fencemask import kernels
from fencemask._random import as_rng, derive_rng
from fencemask.geometry import occluded_fraction

__all__ = [
    "BBox",
    "Calibration",
    "CalibrationError",
    "Corpus",
    "CorpusError",
    "CorpusImage",
    "NonMonotoneError",
    "OcclusionReport",
    "calibrate",
    "calibrate_to_occlusion",
    "measure_occlusion",
    "sample_occlusion",
    "object_occlusion_ratio",
    "run_failure_study",
    "synthesize_small_object_corpus",
]

log = logging.getLogger(__name__)


class CalibrationError(RuntimeError):
    """Target occlusion cannot be reached within the parameter bounds."""


class NonMonotoneError(CalibrationError):
    """Measured occlusion did not move monotonically with the scale parameter."""


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class BBox:
    x: int
    y: int
    w: int
    h: int
    label: str | None = None

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box must be at least 1x1, got {self.w}x{self.h}")

    @property
    def area(self):
        return self.w * self.h

    def as_tuple(self):
        return self.x, self.y, self.w, self.h

    def overlaps(self, other):
        return (self.x < other.x + other.w and other.x < self.x + self.w
                and self.y < other.y + other.h and other.y < self.y + self.h)


@dataclass(frozen=True)
class CorpusImage:
    image_id: int
    width: int
    height: int
    boxes: tuple = ()
    file_name: str | None = None


@dataclass(frozen=True)
class Corpus:
    images: tuple

    def __len__(self):
        return len(self.images)

    @property
    def n_objects(self):
        return sum(len(im.boxes) for im in self.images)


@dataclass
class OcclusionReport:
    """Occlusion statistics for one method over a corpus.

    ``per_object_occlusion`` and ``per_object_max_occlusion`` hold one value
    per annotated object: the mean and the maximum over all seeded masks.
    ``failure_rate`` is the fraction of (object, mask) pairs whose occluded
    fraction exceeds ``failure_threshold``.
    """

    method: str
    global_occlusion: float
    per_object_occlusion: list
    per_object_max_occlusion: list
    failure_threshold: float
    failure_rate: float
    n_images: int
    n_objects: int
    seeds: int
    config: dict = field(default_factory=dict)

    @property
    def mean_object_occlusion(self):
        return float(np.mean(self.per_object_occlusion)) if self.per_object_occlusion else 0.0

    @property
    def mean_object_max_occlusion(self):
        return float(np.mean(self.per_object_max_occlusion)) if self.per_object_max_occlusion else 0.0

    def summary(self):
        return {
            "method": self.method,
            "global_occlusion": self.global_occlusion,
            "mean_object_occlusion": self.mean_object_occlusion,
            "mean_object_max_occlusion": self.mean_object_max_occlusion,
            "failure_threshold": self.failure_threshold,
            "failure_rate": self.failure_rate,
            "n_images": self.n_images,
            "n_objects": self.n_objects,
            "seeds": self.seeds,
        }

    def to_dict(self):
        return {
            **self.summary(),
            "per_object_occlusion": list(self.per_object_occlusion),
            "per_object_max_occlusion": list(self.per_object_max_occlusion),
            "config": self.config,
        }


def _check_inside(box, width, height):
    if box.x < 0 or box.y < 0 or box.x + box.w > width or box.y + box.h > height:
        raise ValueError(f"box {box.as_tuple()} is outside a {width}x{height} mask")


def object_occlusion_ratio(mask, box):
    """Fraction of the box's pixels that the mask occludes."""
    _check_inside(box, mask.width, mask.height)
    return int(kernels.box_occluded_counts(mask.keep, [box.as_tuple()])[0]) / box.area


def sample_occlusion(config, width, height, n_samples, base_seed):
    """Occluded fraction of each of ``n_samples`` masks from fixed seeded streams."""
    out = np.empty(n_samples)
    for i in range(n_samples):
        _, mask = config.generate(width, height, derive_rng(base_seed, i))
        out[i] = occluded_fraction(mask)
    return out


def measure_occlusion(config, width, height, n_samples, base_seed):
    """Mean occluded fraction over ``n_samples`` masks from fixed seeded streams."""
    return float(sample_occlusion(config, width, height, n_samples, base_seed).mean())


@dataclass(frozen=True)
class Calibration:
    config: object
    value: float
    measured: float
    base_seed: int
    n_samples: int
    evaluations: int


def calibrate_to_occlusion(config, target_fraction, width, height, n_samples, rng, tol=0.01, max_iter=60,
                           max_stderr=None):
    """Return a copy of ``config`` whose mean occlusion is within ``tol`` of the target."""
    return calibrate(config, target_fraction, width, height, n_samples, rng, tol, max_iter, max_stderr).config


def calibrate(config, target_fraction, width, height, n_samples, rng, tol=0.01, max_iter=60,
              max_stderr=None, max_samples=20_000):
    """Bisect the config's scale parameter until mean occlusion is within ``tol`` of the target.

    All evaluations reuse the same seeded streams (``measure_occlusion`` with
    ``base_seed``), so the measured occlusion is a deterministic function of
    the scale value. Bisection continues toward ``tol / 4`` while it can and
    keeps the closest value found.

    With ``max_stderr`` set, the per-mask spread at the calibrated value is
    checked afterwards; if ``n_samples`` masks leave a larger standard error
    the calibration is repeated once with enough samples (up to
    ``max_samples``). High-variance methods such as Hide-and-Seek need this
    for the calibrated value to hold on fresh masks.
    """
    if not 0.0 <= target_fraction <= 1.0:
        raise ValueError(f"target must be in [0, 1], got {target_fraction}")
    base = int(as_rng(rng).integers(2**63))
    cal = _bisect(config, target_fraction, width, height, n_samples, base, tol, max_iter)
    if max_stderr is not None:
        spread = sample_occlusion(cal.config, width, height, n_samples, base).std(ddof=1) if n_samples > 1 else 0.0
        needed = int(np.ceil((spread / max_stderr) ** 2))
        if needed > n_samples:
            n = min(needed, max_samples)
            log.info("%s: per-mask std %.4f, recalibrating with %d samples", config.method, spread, n)
            cal = _bisect(config, target_fraction, width, height, n, base, tol, max_iter)
    return cal


def _bisect(config, target_fraction, width, height, n_samples, base, tol, max_iter):
    best = None
    calls = 0

    def f(value):
        nonlocal best, calls
        calls += 1
        got = measure_occlusion(config.scaled(value), width, height, n_samples, base)
        err = abs(got - target_fraction)
        log.debug("%s: %s=%.6g -> %.5f", config.method, config.scale_param, value, got)
        if err <= tol and (best is None or err < best[0]):
            best = err, value, got
        return got

    def result():
        _, value, got = best
        return Calibration(config.scaled(value), value, got, base, n_samples, calls)

    lo, hi = config.scale_bounds(width, height)
    f_lo = f(lo)
    if f_lo >= target_fraction - tol:
        if best is not None:
            return result()
        raise CalibrationError(f"{config.method}: target {target_fraction} below minimum occlusion {f_lo:.4f}")
    f_hi = f(hi)
    if f_hi < f_lo:
        raise NonMonotoneError(f"{config.method}: occlusion falls from {f_lo:.4f} to {f_hi:.4f} over [{lo}, {hi}]")
    if f_hi < target_fraction - tol:
        raise CalibrationError(
            f"{config.method}: target {target_fraction} above maximum occlusion {f_hi:.4f}")

    for _ in range(max_iter):
        if config.scaled(lo) == config.scaled(hi) or (best is not None and best[0] <= tol / 4):
            break
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid < f_lo - tol or f_mid > f_hi + tol:
            raise NonMonotoneError(
                f"{config.method}: occlusion {f_mid:.4f} at {mid} outside bracket [{f_lo:.4f}, {f_hi:.4f}]")
        if f_mid < target_fraction:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    if best is None:
        raise CalibrationError(
            f"{config.method}: no {config.scale_param} in [{lo}, {hi}] gives occlusion within {tol} of {target_fraction}")
    return result()


def synthesize_small_object_corpus(image_size, object_size, objects_per_image, n_images, rng, max_attempts=10000):
    """Blank images with non-overlapping square boxes placed uniformly at random."""
    width, height = (image_size, image_size) if np.isscalar(image_size) else image_size
    if object_size > min(width, height):
        raise CorpusError(f"object size {object_size} exceeds image size {width}x{height}")
    base = int(as_rng(rng).integers(2**63))
    images = []
    for idx in range(n_images):
        r = derive_rng(base, idx)
        boxes = []
        attempts = 0
        while len(boxes) < objects_per_image:
            if attempts >= max_attempts:
                raise CorpusError(f"could not place {objects_per_image} objects in image {idx}")
            attempts += 1
            x = int(r.integers(0, width - object_size + 1))
            y = int(r.integers(0, height - object_size + 1))
            box = BBox(x, y, object_size, object_size)
            if not any(box.overlaps(b) for b in boxes):
                boxes.append(box)
        images.append(CorpusImage(idx, width, height, tuple(boxes)))
    return Corpus(tuple(images))


def _image_stats(config, image, seeds, base, method_idx, image_idx):
    boxes = np.array([b.as_tuple() for b in image.boxes], dtype=np.int64).reshape(-1, 4)
    areas = boxes[:, 2] * boxes[:, 3]
    ratios = np.empty((len(boxes), seeds))
    fractions = np.empty(seeds)
    for s in range(seeds):
        _, mask = config.generate(image.width, image.height, derive_rng(base, 1, method_idx, image_idx, s))
        fractions[s] = occluded_fraction(mask)
        if len(boxes):
            ratios[:, s] = kernels.box_occluded_counts(mask.keep, boxes) / areas
    return ratios, fractions


def run_failure_study(corpus, methods, target_occlusion, threshold=0.9, seeds=100, rng=0,
                      n_samples=200, workers=1, max_stderr=0.0025):
    """Calibrate each method to ``target_occlusion`` and measure per-object occlusion.

    Returns one ``OcclusionReport`` per method, in the order given. Results
    depend only on ``rng``, not on ``workers``.
    """
    if len(corpus) == 0:
        raise CorpusError("corpus has no images")
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    for im in corpus.images:
        for b in im.boxes:
            _check_inside(b, im.width, im.height)
    base = int(as_rng(rng).integers(2**63))
    sizes = sorted({(im.width, im.height) for im in corpus.images})

    reports = []
    for m_idx, config in enumerate(methods):
        calibrated = {
            size: calibrate_to_occlusion(config, target_occlusion, *size, n_samples,
                                         derive_rng(base, 0, m_idx, s_idx), max_stderr=max_stderr)
            for s_idx, size in enumerate(sizes)
        }

        def task(item):
            i, im = item
            return _image_stats(calibrated[(im.width, im.height)], im, seeds, base, m_idx, i)

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            results = list(pool.map(task, enumerate(corpus.images)))

        ratios = np.concatenate([r for r, _ in results], axis=0) if corpus.n_objects else np.empty((0, seeds))
        fractions = np.concatenate([f for _, f in results])
        reports.append(OcclusionReport(
            method=config.method,
            global_occlusion=float(fractions.mean()),
            per_object_occlusion=ratios.mean(axis=1).tolist(),
            per_object_max_occlusion=ratios.max(axis=1).tolist() if len(ratios) else [],
            failure_threshold=float(threshold),
            failure_rate=float((ratios > threshold).mean()) if ratios.size else 0.0,
            n_images=len(corpus),
            n_objects=len(ratios),
            seeds=seeds,
            config={f"{w}x{h}": c.to_dict() for (w, h), c in calibrated.items()},
        ))
    return reports
