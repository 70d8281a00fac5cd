import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gastereo.errors import ConfigError
from gastereo.matching import MatchConfig, build_cost_volume, census_transform


def test_census_constant_image_is_zero():
    assert not census_transform(np.full((6, 7), 0.3), 5).any()


def test_census_bright_neighbours():
    img = np.ones((3, 3))
    img[1, 1] = 0.5
    desc = census_transform(img, 3)
    assert desc.shape == (3, 3, 8)
    assert desc[1, 1].all()


def test_census_single_pixel_outside_is_zero():
    assert not census_transform(np.zeros((1, 1)), 3).any()
    # a bright isolated pixel sees only zero-intensity surroundings
    assert not census_transform(np.ones((1, 1)), 3).any()


def test_census_bit_order_is_row_major():
    img = np.zeros((3, 3))
    img[0, 2] = 1.0  # neighbour index 2 of the centre
    img[2, 0] = 1.0  # neighbour index 5 of the centre
    assert np.flatnonzero(census_transform(img, 3)[1, 1]).tolist() == [2, 5]


@pytest.mark.parametrize("window", [2, 4, 1])
def test_census_bad_window(window):
    with pytest.raises(ConfigError):
        census_transform(np.zeros((3, 3)), window)


def test_config_validation():
    with pytest.raises(ConfigError):
        MatchConfig(1)
    with pytest.raises(ConfigError):
        MatchConfig(8, "census", 4)
    with pytest.raises(ConfigError):
        MatchConfig(8, "sad")


def test_identical_images_zero_plane(rng):
    img = rng.random((8, 10))
    for feature in ("census", "absdiff"):
        c = build_cost_volume(img, img, MatchConfig(4, feature))
        assert c.shape == (8, 10, 4, 1)
        assert np.all(c[:, :, 0] == 0)


def test_exact_shift_absdiff(rng):
    left = rng.random((5, 12))
    right = np.empty_like(left)
    right[:, :-2] = left[:, 2:]
    right[:, -2:] = rng.random((5, 2))
    c = build_cost_volume(left, right, MatchConfig(5, "absdiff"))
    assert np.all(c[:, 2:, 2, 0] == 0)


def test_out_of_range_cost_is_one(rng):
    img = rng.random((4, 6))
    c = build_cost_volume(img, img, MatchConfig(8, "census"))
    for d in range(8):
        assert np.all(c[:, :min(d, 6), d, 0] == 1.0)


def test_shape_mismatch():
    with pytest.raises(ConfigError):
        build_cost_volume(np.zeros((3, 4)), np.zeros((3, 5)), MatchConfig(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["census", "absdiff"]))
def test_costs_in_unit_interval(seed, feature):
    rng = np.random.default_rng(seed)
    c = build_cost_volume(rng.random((6, 9)), rng.random((6, 9)), MatchConfig(5, feature, 3))
    assert c.min() >= 0 and c.max() <= 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 5))
def test_shift_recovered_by_argmin(seed, s):
    rng = np.random.default_rng(seed)
    wide = rng.random((4, 20 + s))
    left, right = wide[:, :20], wide[:, s:]
    c = build_cost_volume(left, right, MatchConfig(8, "absdiff"))
    assert np.all(np.argmin(c[:, s:, :, 0], axis=2) == s)
