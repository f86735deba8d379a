"""Applying masks to images and the linear application schedule."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fencemask._random import as_rng

__all__ = ["ScheduleConfig", "apply_mask", "as_image", "augment", "schedule_probability"]


@dataclass(frozen=True)
class ScheduleConfig:
    """Application probability ramps from 0 to ``max_prob`` over ``max_epoch`` epochs."""

    max_prob: float = 1.0
    max_epoch: int = 1

    def __post_init__(self):
        if not 0.0 <= self.max_prob <= 1.0:
            raise ValueError(f"max_prob must be in [0, 1], got {self.max_prob}")
        if int(self.max_epoch) != self.max_epoch or self.max_epoch < 1:
            raise ValueError(f"max_epoch must be an integer >= 1, got {self.max_epoch}")


def as_image(image):
    """Validate an image buffer: uint8, shape (H, W) or (H, W, C) with C in {1, 3}."""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise TypeError(f"image must be uint8, got {image.dtype}")
    if image.ndim == 2:
        return image
    if image.ndim != 3 or image.shape[2] not in (1, 3):
        raise ValueError(f"image must be HxW, HxWx1 or HxWx3, got shape {image.shape}")
    return image


def apply_mask(image, mask, fill=(0, 0, 0)):
    """Return a copy of ``image`` with occluded pixels replaced by ``fill``.

    Grayscale images use ``fill[0]``. With ``fill == 0`` this is the same as
    multiplying the image by the mask.
    """
    image = as_image(image)
    if image.shape[:2] != mask.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image shape {image.shape[:2]}")
    fill = np.atleast_1d(np.asarray(fill, dtype=np.uint8))
    out = image.copy()
    hidden = ~mask.keep
    if image.ndim == 2:
        out[hidden] = fill[0]
    else:
        out[hidden] = fill[: image.shape[2]]
    return out


def schedule_probability(epoch, schedule):
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return schedule.max_prob * min(epoch / schedule.max_epoch, 1.0)


def augment(image, config, schedule, epoch, rng):
    """Apply a random mask with the scheduled probability.

    ``config`` is any mask config (``FenceConfig`` or a baseline config).
    Returns ``(image, applied, params)``; ``params`` is the sampled mask
    parameters, or None when the mask was not applied.
    """
    image = as_image(image)
    rng = as_rng(rng)
    if rng.random() >= schedule_probability(epoch, schedule):
        return image.copy(), False, None
    height, width = image.shape[:2]
    params, mask = config.generate(width, height, rng)
    return apply_mask(image, mask, config.fill), True, params
