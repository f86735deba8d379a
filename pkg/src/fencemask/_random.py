"""Seeded random streams.

Every random draw in the package goes through a ``numpy.random.Generator``.
Derived streams are keyed by integer tuples, never by execution order, so
parallel runs reproduce serial ones.
"""
import math

import numpy as np


def as_rng(rng):
    """Accept a Generator, an int seed, or a sequence of ints."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("a seed or Generator is required; unseeded runs are not supported")
    return np.random.default_rng(rng)


def derive_rng(*key):
    """Independent stream for a tuple of non-negative ints."""
    return np.random.default_rng([int(k) for k in key])


def uniform_int(u, lo, hi):
    """Map ``u`` in [0, 1) to an integer in ``[lo, hi]`` inclusive."""
    lo, hi = int(lo), int(hi)
    return min(lo + int(math.floor(u * (hi - lo + 1))), hi)


def uniform_real(u, lo, hi):
    return lo + u * (hi - lo)
