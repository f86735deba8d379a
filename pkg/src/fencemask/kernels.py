"""Backend selection for the hot mask kernels.

The compiled ``_core`` extension is used when it was built; otherwise the
numpy implementations in ``_pykernels`` are used. Both produce identical
output, so the choice only affects speed.
"""
from fencemask import _pykernels

try:
    from fencemask import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _pykernels}
if _core is not None:
    _BACKENDS["native"] = _core

_active = _core if _core is not None else _pykernels


def available_backends():
    return sorted(_BACKENDS)


def backend():
    """Name of the active backend."""
    return "native" if _active is _core and _core is not None else "python"


def use_backend(name):
    """Switch the active backend; returns the previous backend name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}")
    previous = backend()
    _active = _BACKENDS[name]
    return previous


def stripe_keep(width, height, c, s, phase, w, period):
    return _active.stripe_keep(width, height, float(c), float(s), float(phase), float(w), float(period))


def fence_keep(width, height, a, b):
    return _active.fence_keep(width, height, tuple(map(float, a)), tuple(map(float, b)))


def box_occluded_counts(keep, boxes):
    return _active.box_occluded_counts(keep, boxes)
