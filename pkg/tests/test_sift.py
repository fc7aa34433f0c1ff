"""Fixed-geometry upright descriptor: edge responses and invariances."""

import numpy as np
import pytest

from forgedetect.imaging import Image
from forgedetect.keypoints import canonical_keypoints
from forgedetect.sift import DESCRIPTOR_DIM, extract_handcrafted, sift_descriptor


def test_constant_window_gives_zero_descriptor():
    pix = np.full((32, 32), 0.7)
    d = sift_descriptor(pix, (16, 16))
    assert d.shape == (DESCRIPTOR_DIM,)
    assert np.array_equal(d, np.zeros(DESCRIPTOR_DIM))


def test_vertical_edge_hits_only_bin_zero():
    # brightness increases to the right: gradient points along +col, angle 0
    pix = np.zeros((32, 32))
    pix[:, 16:] = 1.0
    d = sift_descriptor(pix, (16, 16)).reshape(4, 4, 8)
    assert d.sum() > 0
    assert np.array_equal(d[:, :, 1:], np.zeros((4, 4, 7)))


def test_horizontal_edge_hits_only_bin_four_half():
    # brightness increases downward: gradient along +row, angle pi/2 -> bin 2
    pix = np.zeros((32, 32))
    pix[16:, :] = 1.0
    d = sift_descriptor(pix, (16, 16)).reshape(4, 4, 8)
    assert d.sum() > 0
    hot = {b for b in range(8) if d[:, :, b].any()}
    assert hot == {2}


def test_offset_invariance():
    rng = np.random.default_rng(0)
    pix = rng.random((40, 40)) * 0.5
    a = sift_descriptor(pix, (20, 20))
    b = sift_descriptor(pix + 0.25, (20, 20))
    assert np.abs(a - b).max() <= 1e-9


def test_gain_invariance():
    rng = np.random.default_rng(1)
    pix = rng.random((40, 40)) * 0.4
    a = sift_descriptor(pix, (20, 20))
    b = sift_descriptor(pix * 2.0, (20, 20))
    assert np.abs(a - b).max() <= 1e-9


def test_unit_norm_and_nonnegative_over_random_windows():
    rng = np.random.default_rng(2)
    for _ in range(100):
        pix = rng.random((24, 24))
        d = sift_descriptor(pix, (12, 12))
        assert d.min() >= 0.0
        assert abs(np.linalg.norm(d) - 1.0) <= 1e-9


def test_window_bounds_checked():
    pix = np.zeros((32, 32))
    with pytest.raises(ValueError):
        sift_descriptor(pix, (4, 16))
    with pytest.raises(ValueError):
        sift_descriptor(pix, (16, 30))


def test_extract_handcrafted_shape_and_determinism():
    rng = np.random.default_rng(3)
    img = Image(pixels=rng.random((160, 160)))
    a = extract_handcrafted(img)
    b = extract_handcrafted(img, canonical_keypoints(160, 160))
    assert a.shape == (68, DESCRIPTOR_DIM)
    assert np.array_equal(a, b)
