"""Pure numpy implementations of the mask kernels.

These are the reference path. ``_core.pyx`` mirrors them operation for
operation so both backends produce bit-identical masks. The stripe
coordinate is reduced modulo the period with ``v - floor(v / p) * p`` plus
range fix-ups rather than ``fmod``, which keeps the compiled loop cheap.
"""
import numpy as np


def _stripe_hit(width, height, c, s, phase, w, period):
    xs = (np.arange(width, dtype=np.float64) + 0.5) * c
    ys = (np.arange(height, dtype=np.float64) + 0.5) * s - phase
    v = xs[None, :] + ys[:, None]
    return _floor_mod(v, period) < w


def _floor_mod(v, period):
    # same operation order as the C kernel; the two fix-ups absorb rounding
    # in the reciprocal so the result always lands in [0, period)
    r = v - np.floor(v * (1.0 / period)) * period
    r = np.where(r < 0.0, r + period, r)
    return np.where(r >= period, r - period, r)


def stripe_keep(width, height, c, s, phase, w, period):
    """Keep bits (True = kept) for one stripe family."""
    if w <= 0:
        return np.ones((height, width), dtype=bool)
    return ~_stripe_hit(width, height, c, s, phase, w, period)


def fence_keep(width, height, a, b):
    """Keep bits of two stripe families combined.

    ``a`` and ``b`` are ``(c, s, phase, w, period)`` tuples.
    """
    return stripe_keep(width, height, *a) & stripe_keep(width, height, *b)


def box_occluded_counts(keep, boxes):
    """Number of occluded pixels inside each ``(x, y, w, h)`` box."""
    boxes = np.asarray(boxes, dtype=np.int64).reshape(-1, 4)
    out = np.empty(len(boxes), dtype=np.int64)
    for i, (x, y, w, h) in enumerate(boxes):
        out[i] = w * h - np.count_nonzero(keep[y:y + h, x:x + w])
    return out
