"""Netpbm round trips, parse failures, and the nine-patch layout."""

import numpy as np
import pytest

from forgedetect.imaging import (
    PATCH_SIZE,
    Image,
    ImageSizeError,
    PnmParseError,
    extract_patches,
    load_pnm,
    patch_offsets,
    save_pnm,
)


def test_patch_offsets_384():
    offs = patch_offsets(384, 384)
    anchors = (0, 128, 256)
    assert offs == [(r, c) for r in anchors for c in anchors]


def test_patch_offsets_degenerate_128():
    assert patch_offsets(128, 128) == [(0, 0)] * 9


def test_patch_offsets_odd_300():
    offs = patch_offsets(300, 300)
    anchors = (0, 86, 172)  # floor((300-128)/2) == 86
    assert offs == [(r, c) for r in anchors for c in anchors]


def test_patch_offsets_rejects_small():
    with pytest.raises(ImageSizeError):
        patch_offsets(127, 400)
    with pytest.raises(ImageSizeError):
        patch_offsets(400, 100)


def test_extract_patches_values():
    rng = np.random.default_rng(0)
    img = Image(pixels=rng.random((192, 160)))
    grid = extract_patches(img)
    assert len(grid.patches) == 9
    for (r, c), patch in zip(grid.offsets, grid.patches):
        assert patch.shape == (PATCH_SIZE, PATCH_SIZE)
        assert np.array_equal(patch, img.pixels[r : r + 128, c : c + 128])


def test_p5_binary_decode(tmp_path):
    p = tmp_path / "tiny.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    img = load_pnm(p)
    assert img.pixels.shape == (2, 2)
    assert np.allclose(img.pixels, [[0.0, 1.0], [128 / 255, 64 / 255]])


def test_p2_ascii_decode_with_comment(tmp_path):
    p = tmp_path / "tiny.ascii.pgm"
    p.write_bytes(b"P2\n# a comment\n2 2\n255\n0 255\n128 64\n")
    img = load_pnm(p)
    assert np.allclose(img.pixels, [[0.0, 1.0], [128 / 255, 64 / 255]])


def test_p2_and_p5_agree(tmp_path):
    vals = [0, 17, 200, 255, 90, 3]
    (tmp_path / "a.pgm").write_bytes(b"P5\n3 2\n255\n" + bytes(vals))
    body = " ".join(map(str, vals)).encode()
    (tmp_path / "b.pgm").write_bytes(b"P2\n3 2\n255\n" + body + b"\n")
    a = load_pnm(tmp_path / "a.pgm")
    b = load_pnm(tmp_path / "b.pgm")
    assert np.array_equal(a.pixels, b.pixels)


def test_p6_luma_conversion(tmp_path):
    # pure red, green, blue pixels map through BT.601 weights
    p = tmp_path / "rgb.ppm"
    p.write_bytes(b"P6\n3 1\n255\n" + bytes([255, 0, 0, 0, 255, 0, 0, 0, 255]))
    img = load_pnm(p)
    assert np.allclose(img.pixels, [[0.299, 0.587, 0.114]], atol=1e-12)


def test_16bit_maxval(tmp_path):
    p = tmp_path / "deep.pgm"
    p.write_bytes(b"P5\n2 1\n65535\n" + (0).to_bytes(2, "big") + (65535).to_bytes(2, "big"))
    img = load_pnm(p)
    assert np.allclose(img.pixels, [[0.0, 1.0]])


def test_save_load_roundtrip_quantization(tmp_path):
    rng = np.random.default_rng(1)
    img = Image(pixels=rng.random((40, 56)))
    save_pnm(img, tmp_path / "r.pgm")
    back = load_pnm(tmp_path / "r.pgm")
    assert back.pixels.shape == (40, 56)
    assert np.abs(back.pixels - img.pixels).max() <= 0.5 / 255 + 1e-12


def test_parse_error_bad_magic(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P7\n2 2\n255\n" + bytes(4))
    with pytest.raises(PnmParseError) as exc:
        load_pnm(p)
    assert exc.value.offset == 0


def test_parse_error_nonint_header(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\nxx 2\n255\n" + bytes(4))
    with pytest.raises(PnmParseError) as exc:
        load_pnm(p)
    assert exc.value.offset == 3
    assert "byte offset 3" in str(exc.value)


def test_parse_error_truncated_pixels(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
    with pytest.raises(PnmParseError, match="truncated"):
        load_pnm(p)


def test_parse_error_sample_exceeds_maxval(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\n2 1\n100\n50 101\n")
    with pytest.raises(PnmParseError, match="exceeds maxval"):
        load_pnm(p)


def test_parse_error_bad_maxval(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\n2 1\n0\n\x00\x00")
    with pytest.raises(PnmParseError):
        load_pnm(p)


def test_image_validates_range():
    with pytest.raises(ValueError):
        Image(pixels=np.array([[0.0, 1.5]]))
    with pytest.raises(ValueError):
        Image(pixels=np.zeros((0, 4)))
