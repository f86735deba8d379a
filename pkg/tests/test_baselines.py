import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fencemask.baselines import (
    METHODS,
    CutoutConfig,
    GridMaskConfig,
    HideAndSeekConfig,
    RandomErasingConfig,
    cutout_mask,
    gridmask_mask,
    hide_and_seek_mask,
    make_config,
    random_erasing_mask,
)
from fencemask.geometry import occluded_fraction


def brute_force_cutout(side, cx, cy, width, height):
    x0, y0 = cx - side // 2, cy - side // 2
    return sum(x0 <= x < x0 + side and y0 <= y < y0 + side for y in range(height) for x in range(width))


def test_cutout_zero_side_keeps_all():
    assert cutout_mask(0, 10, 10, 0).n_occluded() == 0


@pytest.mark.parametrize("seed", range(10))
def test_cutout_huge_side_covers_all(seed):
    assert cutout_mask(2 * 37, 37, 21, seed).n_occluded() == 37 * 21
    assert cutout_mask(2 * 37 + 1, 37, 21, seed).n_occluded() == 37 * 21


def test_cutout_centered_quarter():
    m = cutout_mask(4, 8, 8, None, center=(4, 4))
    assert m.n_occluded() == 16 and occluded_fraction(m) == 0.25


@pytest.mark.parametrize("side,cx,cy", [(5, 0, 0), (7, 12, 3), (3, 14, 9), (10, 5, 5), (1, 2, 8)])
def test_cutout_clipped_matches_brute_force(side, cx, cy):
    assert cutout_mask(side, 15, 10, None, center=(cx, cy)).n_occluded() == brute_force_cutout(side, cx, cy, 15, 10)


def test_random_erasing_full_image():
    mask, fell_back = random_erasing_mask((1, 1), (32 / 64, 32 / 64), 64, 32, 0)
    assert not fell_back and mask.n_occluded() == 64 * 32


def test_random_erasing_fallback():
    mask, fell_back = random_erasing_mask((0.9, 0.9), (5, 5), 100, 5, 0, max_attempts=20)
    assert fell_back and mask.n_occluded() == 0


def test_random_erasing_quarter():
    for seed in range(20):
        mask, fell_back = random_erasing_mask((0.25, 0.25), (1, 1), 100, 100, seed)
        assert not fell_back and abs(occluded_fraction(mask) - 0.25) <= 0.01
        ys, xs = np.nonzero(~mask.keep)
        assert xs.max() - xs.min() + 1 == 50 and ys.max() - ys.min() + 1 == 50


def test_hide_and_seek_extremes():
    assert hide_and_seek_mask(4, 0.0, 30, 20, 0).n_occluded() == 0
    assert hide_and_seek_mask(4, 1.0, 30, 20, 0).n_occluded() == 600


def test_hide_and_seek_remainder_cells():
    m = hide_and_seek_mask(3, 1.0, 10, 10, 0)
    assert m.n_occluded() == 100
    # with only the last cell hidden it should be 4x4 (3 + remainder 1)
    hidden = np.zeros((3, 3), bool)
    hidden[2, 2] = True
    from fencemask.baselines import _cell_index
    rows, cols = _cell_index(10, 3), _cell_index(10, 3)
    assert (hidden[rows][:, cols]).sum() == 16


def test_hide_and_seek_mean():
    fr = [occluded_fraction(hide_and_seek_mask(4, 0.5, 64, 64, s)) for s in range(10_000)]
    assert abs(np.mean(fr) - 0.5) <= 0.02


def test_gridmask_extremes():
    assert gridmask_mask(8, 1.0, 30, 30, 0).n_occluded() == 0
    assert gridmask_mask(8, 0.0, 30, 30, 0).n_occluded() == 900


def test_gridmask_quarter():
    m = gridmask_mask(8, 0.5, 64, 64, None, phase=(0, 0))
    assert occluded_fraction(m) == 0.25


@pytest.mark.parametrize("d,r", [(8, 0.5), (16, 0.3), (32, 0.81), (4, 0.6)])
def test_gridmask_exact_any_phase(d, r):
    block = int(np.floor((1 - r) * d + 0.5))
    for seed in range(20):
        assert occluded_fraction(gridmask_mask(d, r, 64, 64, seed)) == (block / d) ** 2


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(METHODS)), st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**31))
def test_generators_shape_and_determinism(method, width, height, seed):
    cfg = make_config(method)
    p1, m1 = cfg.generate(width, height, seed)
    p2, m2 = cfg.generate(width, height, seed)
    assert m1.shape == (height, width)
    assert m1 == m2 and p1 == p2


def test_config_validation():
    with pytest.raises(ValueError):
        CutoutConfig(side=-1)
    with pytest.raises(ValueError):
        RandomErasingConfig(area_min=0)
    with pytest.raises(ValueError):
        RandomErasingConfig(aspect_min=2, aspect_max=1)
    with pytest.raises(ValueError):
        HideAndSeekConfig(divisions=0)
    with pytest.raises(ValueError):
        GridMaskConfig(keep_ratio=1.2)
    with pytest.raises(ValueError):
        make_config("mixup")


@pytest.mark.parametrize("method", sorted(METHODS))
def test_scale_parameter_increases_occlusion(method):
    cfg = make_config(method)
    lo, hi = cfg.scale_bounds(128, 128)
    values = np.linspace(lo, hi * 0.9, 6)
    means = [np.mean([occluded_fraction(cfg.scaled(v).generate(128, 128, s)[1]) for s in range(30)])
             for v in values]
    assert means[0] <= 0.01 and means[-1] > means[0]
    assert all(b >= a - 0.02 for a, b in zip(means, means[1:]))
