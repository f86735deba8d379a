"""Mask generators for the comparison methods.

CutOut, Random Erasing, Hide-and-Seek and GridMask, all returning a
``BinaryMask`` so the analysis code can treat every method the same way.
Each ``*Config`` class also names one scalar (``scale_param``) that
increases mean occlusion monotonically; the calibrator tunes only that one.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from fencemask._random import as_rng, uniform_int, uniform_real
from fencemask.geometry import BinaryMask, FenceConfig, _check_fill

__all__ = [
    "CutoutConfig",
    "GridMaskConfig",
    "HideAndSeekConfig",
    "METHODS",
    "RandomErasingConfig",
    "cutout_mask",
    "gridmask_mask",
    "hide_and_seek_mask",
    "make_config",
    "random_erasing_mask",
]


def _round_half_up(v):
    return int(math.floor(v + 0.5))


def cutout_mask(side, width, height, rng, center=None):
    """Occlude one axis-aligned square of ``side`` pixels, clipped at the border.

    The center is uniform over pixel positions unless ``center=(cx, cy)`` is given.
    """
    if side < 0:
        raise ValueError(f"side must be >= 0, got {side}")
    if center is None:
        u = as_rng(rng).random(2)
        center = uniform_int(u[0], 0, width - 1), uniform_int(u[1], 0, height - 1)
    cx, cy = center
    x0, y0 = cx - side // 2, cy - side // 2
    keep = np.ones((height, width), dtype=bool)
    keep[max(y0, 0):max(y0 + side, 0), max(x0, 0):max(x0 + side, 0)] = False
    return BinaryMask(keep)


def random_erasing_mask(area_range, aspect_range, width, height, rng, max_attempts=100):
    """Occlude one rectangle placed fully inside the image.

    Area (as a fraction of the image) and aspect ratio ``h / w`` are drawn
    uniformly from their ranges; a draw that does not fit is retried up to
    ``max_attempts`` times. Returns ``(mask, fell_back)``; on fallback the
    mask keeps every pixel.
    """
    rng = as_rng(rng)
    s_l, s_h = area_range
    r_1, r_2 = aspect_range
    total = width * height
    for _ in range(max_attempts):
        u = rng.random(4)
        area = uniform_real(u[0], s_l, s_h) * total
        aspect = uniform_real(u[1], r_1, r_2)
        h = _round_half_up(math.sqrt(area * aspect))
        w = _round_half_up(math.sqrt(area / aspect))
        if h <= height and w <= width:
            x = uniform_int(u[2], 0, width - w)
            y = uniform_int(u[3], 0, height - h)
            keep = np.ones((height, width), dtype=bool)
            keep[y:y + h, x:x + w] = False
            return BinaryMask(keep), False
    return BinaryMask.full(width, height), True


def _cell_index(n, divisions):
    # the last cell takes the remainder pixels
    base = n // divisions
    return np.minimum(np.arange(n) // base, divisions - 1) if base else np.full(n, divisions - 1)


def hide_and_seek_mask(divisions, hide_prob, width, height, rng):
    """Split the image into ``divisions`` x ``divisions`` cells and hide each with ``hide_prob``."""
    if divisions < 1:
        raise ValueError(f"divisions must be >= 1, got {divisions}")
    hidden = as_rng(rng).random((divisions, divisions)) < hide_prob
    rows, cols = _cell_index(height, divisions), _cell_index(width, divisions)
    return BinaryMask(~hidden[rows][:, cols])


def gridmask_mask(period, keep_ratio, width, height, rng, phase=None):
    """Square blocks of side ``round((1 - keep_ratio) * period)`` tiled every ``period`` pixels."""
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    if not 0.0 <= keep_ratio <= 1.0:
        raise ValueError(f"keep_ratio must be in [0, 1], got {keep_ratio}")
    if phase is None:
        u = as_rng(rng).random(2)
        phase = uniform_int(u[0], 0, period - 1), uniform_int(u[1], 0, period - 1)
    block = _round_half_up((1.0 - keep_ratio) * period)
    hit_x = (np.arange(width) - phase[0]) % period < block
    hit_y = (np.arange(height) - phase[1]) % period < block
    return BinaryMask(~(hit_y[:, None] & hit_x[None, :]))


class _MethodConfig:
    def to_dict(self):
        d = asdict(self)
        d["fill"] = list(self.fill)
        return {"method": self.method, **d}

    def _copy(self, **changes):
        return type(self)(**{**asdict(self), **changes})


@dataclass(frozen=True)
class CutoutConfig(_MethodConfig):
    side: int = 16
    fill: tuple = (0, 0, 0)

    method = "cutout"
    scale_param = "side"

    def __post_init__(self):
        if int(self.side) != self.side or self.side < 0:
            raise ValueError(f"side must be an integer >= 0, got {self.side}")
        object.__setattr__(self, "side", int(self.side))
        object.__setattr__(self, "fill", _check_fill(self.fill))

    def generate(self, width, height, rng):
        u = as_rng(rng).random(2)
        center = uniform_int(u[0], 0, width - 1), uniform_int(u[1], 0, height - 1)
        mask = cutout_mask(self.side, width, height, None, center=center)
        return {"center_x": center[0], "center_y": center[1]}, mask

    def scaled(self, value):
        return self._copy(side=_round_half_up(value))

    def scale_bounds(self, width, height):
        return 0.0, 2.0 * max(width, height)


@dataclass(frozen=True)
class RandomErasingConfig(_MethodConfig):
    area_min: float = 0.02
    area_max: float = 0.4
    aspect_min: float = 0.3
    aspect_max: float = 1 / 0.3
    max_attempts: int = 100
    fill: tuple = (0, 0, 0)

    method = "random_erasing"
    scale_param = "area"

    def __post_init__(self):
        if not 0 < self.area_min <= self.area_max <= 1:
            raise ValueError(f"need 0 < area_min <= area_max <= 1, got {self.area_min}, {self.area_max}")
        if not 0 < self.aspect_min <= self.aspect_max:
            raise ValueError(f"need 0 < aspect_min <= aspect_max, got {self.aspect_min}, {self.aspect_max}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        object.__setattr__(self, "fill", _check_fill(self.fill))

    def generate(self, width, height, rng):
        mask, fell_back = random_erasing_mask(
            (self.area_min, self.area_max), (self.aspect_min, self.aspect_max),
            width, height, rng, self.max_attempts,
        )
        return {"fell_back": fell_back}, mask

    def scaled(self, value):
        """Fixed erasing area: both area bounds set to ``value``."""
        return self._copy(area_min=value, area_max=value)

    def scale_bounds(self, width, height):
        # near area 1 most aspect draws stop fitting and occlusion falls again
        return 1e-12, 0.9


@dataclass(frozen=True)
class HideAndSeekConfig(_MethodConfig):
    divisions: int = 4
    hide_prob: float = 0.5
    fill: tuple = (0, 0, 0)

    method = "hide_and_seek"
    scale_param = "hide_prob"

    def __post_init__(self):
        if self.divisions < 1:
            raise ValueError(f"divisions must be >= 1, got {self.divisions}")
        if not 0.0 <= self.hide_prob <= 1.0:
            raise ValueError(f"hide_prob must be in [0, 1], got {self.hide_prob}")
        object.__setattr__(self, "fill", _check_fill(self.fill))

    def generate(self, width, height, rng):
        mask = hide_and_seek_mask(self.divisions, self.hide_prob, width, height, rng)
        return {"occluded_pixels": mask.n_occluded()}, mask

    def scaled(self, value):
        return self._copy(hide_prob=min(max(value, 0.0), 1.0))

    def scale_bounds(self, width, height):
        return 0.0, 1.0


@dataclass(frozen=True)
class GridMaskConfig(_MethodConfig):
    period: int = 128
    keep_ratio: float = 0.5
    fill: tuple = (0, 0, 0)

    method = "gridmask"
    # the calibrated scalar is the block fraction 1 - keep_ratio
    scale_param = "block_ratio"

    def __post_init__(self):
        if int(self.period) != self.period or self.period < 1:
            raise ValueError(f"period must be an integer >= 1, got {self.period}")
        if not 0.0 <= self.keep_ratio <= 1.0:
            raise ValueError(f"keep_ratio must be in [0, 1], got {self.keep_ratio}")
        object.__setattr__(self, "period", int(self.period))
        object.__setattr__(self, "fill", _check_fill(self.fill))

    def generate(self, width, height, rng):
        u = as_rng(rng).random(2)
        phase = uniform_int(u[0], 0, self.period - 1), uniform_int(u[1], 0, self.period - 1)
        mask = gridmask_mask(self.period, self.keep_ratio, width, height, None, phase=phase)
        return {"phase_x": phase[0], "phase_y": phase[1]}, mask

    def scaled(self, value):
        return self._copy(keep_ratio=1.0 - min(max(value, 0.0), 1.0))

    def scale_bounds(self, width, height):
        return 0.0, 1.0


METHODS = {
    "fencemask": FenceConfig,
    "cutout": CutoutConfig,
    "random_erasing": RandomErasingConfig,
    "hide_and_seek": HideAndSeekConfig,
    "gridmask": GridMaskConfig,
}


def make_config(method, **params):
    """Build the config for ``method`` from keyword parameters."""
    try:
        cls = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    return cls(**params)
