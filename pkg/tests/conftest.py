import math

import numpy as np
import pytest

from fencemask import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    previous = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


def brute_force_stripe_occluded(w, g, theta, phase, width, height):
    """Pixel-by-pixel evaluation of the stripe predicate with Python floats."""
    c, s = math.cos(math.radians(theta)), math.sin(math.radians(theta))
    period = w + g
    out = np.zeros((height, width), dtype=bool)
    for y in range(height):
        for x in range(width):
            v = (x + 0.5) * c + (y + 0.5) * s - phase
            out[y, x] = v - period * math.floor(v / period) < w
    return out


def axis_occluded_count(w, g, phase, n):
    """Exact count of occluded positions along one axis (half-integer centers, integer math)."""
    period = w + g
    return sum(((2 * x + 1 - 2 * phase) % (2 * period)) < 2 * w for x in range(n))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
