"""FenceMask parameter sampling and stripe rasterization.

A fence mask is two families of parallel stripes. Each family is defined by
a stripe width ``w``, a gap ``g`` between stripes, an angle and a phase.
A pixel with center ``(x + 0.5, y + 0.5)`` is covered by a family when::

    ((x + 0.5) * cos(theta) + (y + 0.5) * sin(theta) - phase) mod (w + g) < w

The second family uses ``theta + 90``, so with equal angles the two families
are perpendicular. A pixel is kept only if neither family covers it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from fencemask import kernels
from fencemask._random import as_rng, uniform_int, uniform_real

__all__ = [
    "BinaryMask",
    "FenceConfig",
    "FenceSample",
    "RelativeFenceConfig",
    "combine_fences",
    "generate_fence_mask",
    "occluded_fraction",
    "rasterize_stripes",
    "sample_fence",
]


def _is_integral(v):
    return float(v).is_integer()


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Per-pixel keep bits; ``keep[y, x]`` is True where the pixel survives."""

    keep: np.ndarray

    def __post_init__(self):
        keep = np.asarray(self.keep)
        if keep.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {keep.shape}")
        if keep.dtype != bool:
            keep = keep.astype(bool)
        object.__setattr__(self, "keep", keep)

    @classmethod
    def full(cls, width, height, keep=True):
        return cls(np.full((height, width), bool(keep)))

    @property
    def width(self):
        return self.keep.shape[1]

    @property
    def height(self):
        return self.keep.shape[0]

    @property
    def shape(self):
        return self.keep.shape

    def n_occluded(self):
        return int(self.keep.size - np.count_nonzero(self.keep))

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.keep.shape == other.keep.shape and bool(np.array_equal(self.keep, other.keep))

    __hash__ = None

    def tobytes(self):
        return np.packbits(self.keep).tobytes()


@dataclass(frozen=True)
class FenceConfig:
    """Ranges for fence widths, gaps and rotation, plus the fill value.

    Widths and gaps are pixels. Integer bounds give integer draws (inclusive
    at both ends); non-integer bounds give uniform real draws, which is how
    the occlusion calibration tunes the width continuously.
    """

    w_min: float = 2
    w_max: float = 4
    g_min: float = 8
    g_max: float = 16
    fill: tuple = (0, 0, 0)
    rot_min: float = 0.0
    rot_max: float = 30.0

    method = "fencemask"
    scale_param = "w"

    def __post_init__(self):
        if not 0 <= self.w_min <= self.w_max:
            raise ValueError(f"need 0 <= w_min <= w_max, got {self.w_min}, {self.w_max}")
        if not 1 <= self.g_min <= self.g_max:
            raise ValueError(f"need 1 <= g_min <= g_max, got {self.g_min}, {self.g_max}")
        if not 0 <= self.rot_min <= self.rot_max <= 90:
            raise ValueError(f"need 0 <= rot_min <= rot_max <= 90, got {self.rot_min}, {self.rot_max}")
        object.__setattr__(self, "fill", _check_fill(self.fill))

    def generate(self, width, height, rng):
        return generate_fence_mask(self, width, height, rng)

    def scaled(self, value):
        """Copy with both width bounds set to ``value``."""
        return _replace(self, w_min=value, w_max=value)

    def scale_bounds(self, width, height):
        return 0.0, 4.0 * self.g_max

    def to_dict(self):
        d = asdict(self)
        d["fill"] = list(self.fill)
        return {"method": self.method, **d}


@dataclass(frozen=True)
class RelativeFenceConfig:
    """Fence ranges as fractions of ``min(height, width)``.

    ``resolve`` rounds to the nearest pixel; gaps are at least one pixel.
    """

    w_min: float
    w_max: float
    g_min: float
    g_max: float
    fill: tuple = (0, 0, 0)
    rot_min: float = 0.0
    rot_max: float = 30.0

    def resolve(self, width, height):
        side = min(width, height)
        w_min, w_max = (int(round(v * side)) for v in (self.w_min, self.w_max))
        g_min, g_max = (max(1, int(round(v * side))) for v in (self.g_min, self.g_max))
        return FenceConfig(w_min, w_max, g_min, g_max, self.fill, self.rot_min, self.rot_max)


@dataclass(frozen=True)
class FenceSample:
    """One concrete draw; fully determines a fence mask for a given size."""

    w_x: float
    w_y: float
    g_x: float
    g_y: float
    theta_x: float
    theta_y: float
    phase_x: float
    phase_y: float

    def to_dict(self):
        return {k: (int(v) if _is_integral(v) and k[:5] != "theta" else float(v))
                for k, v in asdict(self).items()}


def _check_fill(fill):
    if np.isscalar(fill):
        fill = (fill,) * 3
    fill = tuple(int(v) for v in fill)
    if len(fill) not in (1, 3) or any(not 0 <= v <= 255 for v in fill):
        raise ValueError(f"fill must be 1 or 3 values in [0, 255], got {fill}")
    return fill * 3 if len(fill) == 1 else fill


def _replace(cfg, **changes):
    return type(cfg)(**{**{k: getattr(cfg, k) for k in cfg.__dataclass_fields__}, **changes})


def _draw_length(u, lo, hi):
    if _is_integral(lo) and _is_integral(hi):
        return uniform_int(u, lo, hi)
    return uniform_real(u, lo, hi)


def _draw_phase(u, period):
    if _is_integral(period):
        return uniform_int(u, 0, int(period) - 1)
    return min(u * period, math.nextafter(period, 0.0))


def sample_fence(config, rng):
    """Draw widths, gaps, angles and phases for both stripe families.

    Always consumes exactly eight uniforms from ``rng``.
    """
    rng = as_rng(rng)
    u = rng.random(8)
    w_x = _draw_length(u[0], config.w_min, config.w_max)
    w_y = _draw_length(u[1], config.w_min, config.w_max)
    g_x = _draw_length(u[2], config.g_min, config.g_max)
    g_y = _draw_length(u[3], config.g_min, config.g_max)
    theta_x = float(uniform_real(u[4], config.rot_min, config.rot_max))
    theta_y = float(uniform_real(u[5], config.rot_min, config.rot_max))
    return FenceSample(
        w_x, w_y, g_x, g_y, theta_x, theta_y,
        _draw_phase(u[6], w_x + g_x),
        _draw_phase(u[7], w_y + g_y),
    )


def _cos_sin(degrees):
    # exact values on the axes so axis-aligned stripes are exactly separable
    d = math.fmod(degrees, 360.0)
    if d < 0:
        d += 360.0
    exact = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}
    if d in exact:
        return exact[d]
    r = math.radians(d)
    return math.cos(r), math.sin(r)


def _family(w, g, theta, phase):
    if w < 0:
        raise ValueError(f"stripe width must be >= 0, got {w}")
    if g < 1:
        raise ValueError(f"stripe gap must be >= 1, got {g}")
    if not 0 <= phase < w + g:
        raise ValueError(f"phase must be in [0, {w + g}), got {phase}")
    c, s = _cos_sin(theta)
    return c, s, float(phase), float(w), float(w + g)


def rasterize_stripes(w, g, theta, phase, width, height):
    """Mask of a single stripe family (see module docstring)."""
    fam = _family(w, g, theta, phase)
    return BinaryMask(kernels.stripe_keep(width, height, *fam))


def combine_fences(mask_a, mask_b):
    """Keep a pixel only if both masks keep it."""
    if mask_a.shape != mask_b.shape:
        raise ValueError(f"mask shapes differ: {mask_a.shape} vs {mask_b.shape}")
    return BinaryMask(mask_a.keep & mask_b.keep)


def render_fence(sample, width, height):
    """Rasterize both families of ``sample`` in a single pass."""
    if width < 1 or height < 1:
        raise ValueError(f"image size must be positive, got {width}x{height}")
    a = _family(sample.w_x, sample.g_x, sample.theta_x, sample.phase_x)
    b = _family(sample.w_y, sample.g_y, sample.theta_y + 90.0, sample.phase_y)
    return BinaryMask(kernels.fence_keep(width, height, a, b))


def generate_fence_mask(config, width, height, rng):
    """Sample a fence and rasterize it; returns ``(sample, mask)``."""
    sample = sample_fence(config, rng)
    return sample, render_fence(sample, width, height)


def occluded_fraction(mask):
    return mask.n_occluded() / mask.keep.size
