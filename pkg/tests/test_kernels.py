import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fencemask import _pykernels, kernels
from fencemask.geometry import _family

native = kernels._core
needs_native = pytest.mark.skipif(native is None, reason="compiled kernels not built")


@needs_native
@settings(max_examples=200, deadline=None)
@given(
    width=st.integers(1, 70), height=st.integers(1, 70),
    w=st.floats(0, 12), g=st.floats(1, 20),
    theta=st.floats(-360, 360), u=st.floats(0, 0.999),
)
def test_backends_bit_identical_stripes(width, height, w, g, theta, u):
    fam = _family(w, g, theta, u * (w + g))
    assert np.array_equal(_pykernels.stripe_keep(width, height, *fam), native.stripe_keep(width, height, *fam))


@needs_native
@settings(max_examples=100, deadline=None)
@given(
    width=st.integers(1, 60), height=st.integers(1, 60),
    wa=st.integers(0, 6), ga=st.integers(1, 9), ta=st.floats(0, 30),
    wb=st.integers(0, 6), gb=st.integers(1, 9), tb=st.floats(0, 30),
)
def test_backends_bit_identical_fence(width, height, wa, ga, ta, wb, gb, tb):
    a = _family(wa, ga, ta, 0)
    b = _family(wb, gb, tb + 90, 0)
    py = _pykernels.fence_keep(width, height, a, b)
    assert np.array_equal(py, native.fence_keep(width, height, a, b))
    assert np.array_equal(py, _pykernels.stripe_keep(width, height, *a) & _pykernels.stripe_keep(width, height, *b))


def test_box_counts_match_brute_force(backend):
    rng = np.random.default_rng(5)
    keep = rng.random((40, 50)) < 0.6
    boxes = [(0, 0, 50, 40), (3, 4, 1, 1), (10, 7, 13, 22), (49, 39, 1, 1)]
    expected = [sum(not keep[y, x] for y in range(by, by + bh) for x in range(bx, bx + bw))
                for bx, by, bw, bh in boxes]
    assert kernels.box_occluded_counts(keep, boxes).tolist() == expected


def test_use_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_falls_back_without_extension():
    import subprocess
    import sys
    code = ("import sys; sys.modules['fencemask._core'] = None\n"
            "from fencemask import kernels, geometry\n"
            "assert kernels.backend() == 'python' and kernels.available_backends() == ['python']\n"
            "print(geometry.rasterize_stripes(2, 2, 0, 0, 8, 8).n_occluded())")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "32"
