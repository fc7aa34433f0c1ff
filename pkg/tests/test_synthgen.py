"""Synthetic corpus: determinism, spectral fingerprints, splits, layout."""

import numpy as np
import pytest

from forgedetect.imaging import load_pnm
from forgedetect.spectral import (
    band_baseline,
    dct2,
    fit_spectrum_stats,
    nyquist_band_mean,
)
from forgedetect.synthgen import (
    PERTURB_MODES,
    SPLIT_NAMES,
    TYPE_ORDER,
    GenSpec,
    dataset_digest,
    emit_dataset,
    gen_fake,
    gen_real,
    generate_image,
    perturb,
    split_counts,
)

SPEC = GenSpec(n_real=20, n_fake_per_type=10, seed=42)


def _center_patch(img):
    n = img.pixels.shape[0]
    o = (n - 128) // 2
    return img.pixels[o : o + 128, o : o + 128]


def test_generation_deterministic():
    for type_name in (None,) + TYPE_ORDER:
        a = generate_image(SPEC, type_name, 3)
        b = generate_image(SPEC, type_name, 3)
        assert np.array_equal(a.pixels, b.pixels)


def test_seed_and_index_change_image():
    a = gen_real(SPEC, 0)
    b = gen_real(SPEC, 1)
    c = gen_real(GenSpec(n_real=20, n_fake_per_type=10, seed=43), 0)
    assert not np.array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, c.pixels)


def test_pixels_in_unit_interval():
    for type_name in (None,) + TYPE_ORDER:
        pix = generate_image(SPEC, type_name, 0).pixels
        assert pix.shape == (192, 192)
        assert pix.min() >= 0.0 and pix.max() <= 1.0


def test_classes_are_pairwise_distinct():
    imgs = {t: generate_image(SPEC, t, 0).pixels for t in (None,) + TYPE_ORDER}
    names = list(imgs)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            assert not np.array_equal(imgs[a], imgs[b]), (a, b)


def test_nearest_has_constant_2x2_blocks():
    pix = gen_fake(SPEC, "nearest", 2).pixels
    assert np.array_equal(pix[0::2, 0::2], pix[1::2, 0::2])
    assert np.array_equal(pix[0::2, 0::2], pix[0::2, 1::2])
    assert np.array_equal(pix[0::2, 0::2], pix[1::2, 1::2])
    # bilinear must not collapse to 2x2 blocks
    bp = gen_fake(SPEC, "bilinear", 2).pixels
    assert not np.array_equal(bp[0::2, 0::2], bp[1::2, 1::2])


def test_checkerboard_band_energy_dominates_reals():
    stats = fit_spectrum_stats(_center_patch(gen_real(SPEC, i)) for i in range(20))
    baseline = band_baseline(stats)
    means = [nyquist_band_mean(dct2(_center_patch(gen_fake(SPEC, "checkerboard", i))))
             for i in range(10)]
    assert np.mean(means) >= 5.0 * baseline


def test_every_fake_type_exceeds_real_band_energy():
    stats = fit_spectrum_stats(_center_patch(gen_real(SPEC, i)) for i in range(20))
    baseline = band_baseline(stats)
    for t in TYPE_ORDER:
        means = [nyquist_band_mean(dct2(_center_patch(gen_fake(SPEC, t, i))))
                 for i in range(10)]
        assert np.mean(means) >= 2.0 * baseline, t


def test_perturb_std_is_identity():
    img = gen_fake(SPEC, "bilinear", 0)
    rng = np.random.default_rng(0)
    out = perturb(img, "std", rng)
    assert np.array_equal(out.pixels, img.pixels)


def test_perturb_replay_deterministic():
    img = gen_fake(SPEC, "nearest", 1)
    for mode in PERTURB_MODES:
        a = perturb(img, mode, np.random.default_rng(7))
        b = perturb(img, mode, np.random.default_rng(7))
        assert np.array_equal(a.pixels, b.pixels)
        assert a.pixels.min() >= 0.0 and a.pixels.max() <= 1.0


def test_perturb_mode_validation():
    img = gen_real(SPEC, 0)
    with pytest.raises(ValueError):
        perturb(img, "weird", np.random.default_rng(0))


def test_mix_actually_perturbs():
    img = gen_fake(SPEC, "blockdct", 0)
    out = perturb(img, "mix", np.random.default_rng(1))
    assert not np.array_equal(out.pixels, img.pixels)


def test_spec_validation():
    with pytest.raises(ValueError):
        GenSpec(n_real=0)
    with pytest.raises(ValueError):
        GenSpec(size=100)
    with pytest.raises(ValueError):
        GenSpec(perturb="none")
    with pytest.raises(ValueError):
        GenSpec(types=("nearest", "upside-down"))


def test_split_arithmetic():
    assert split_counts(100) == (70, 10, 20)
    assert split_counts(10) == (7, 1, 2)
    for n in range(1, 50):
        tr, va, te = split_counts(n)
        assert tr + va + te == n and tr >= 0 and va >= 0 and te >= 0


def test_emit_layout_and_labels(tmp_path):
    out = tmp_path / "ds"
    manifest = emit_dataset(SPEC, out)
    assert manifest["seed"] == 42
    lines = (out / "labels.tsv").read_text().strip().split("\n")
    assert len(lines) == 20 + 4 * 10
    reals = [l for l in lines if "\t0\tnone" in l]
    assert len(reals) == 20
    for line in lines:
        rel, binary, tname = line.split("\t")
        assert rel.split("/")[0] in SPLIT_NAMES
        assert (binary == "0") == (tname == "none")
        img = load_pnm(out / rel)
        assert img.pixels.shape == (192, 192)
    manifest_text = (out / "manifest.txt").read_text()
    assert "n_real=20" in manifest_text and "perturb=std" in manifest_text
    # 7:1:2 split per class
    train_reals = list((out / "train" / "real").glob("*.pgm"))
    assert len(train_reals) == 14
    assert len(list((out / "test" / "fake_nearest").glob("*.pgm"))) == 2


def test_emit_refuses_nonempty_dir(tmp_path):
    out = tmp_path / "ds"
    out.mkdir()
    (out / "stale.txt").write_text("x")
    with pytest.raises(FileExistsError):
        emit_dataset(SPEC, out)
    emit_dataset(SPEC, out, force=True)  # explicit override succeeds


def test_emitted_dataset_bit_deterministic(tmp_path):
    emit_dataset(SPEC, tmp_path / "a")
    emit_dataset(SPEC, tmp_path / "b")
    assert dataset_digest(tmp_path / "a") == dataset_digest(tmp_path / "b")
    other = GenSpec(n_real=20, n_fake_per_type=10, seed=43)
    emit_dataset(other, tmp_path / "c")
    assert dataset_digest(tmp_path / "a") != dataset_digest(tmp_path / "c")


def test_real_and_fake_streams_are_hash_disjoint():
    reals = {gen_real(SPEC, i).pixels.tobytes() for i in range(10)}
    fakes = {gen_fake(SPEC, t, i).pixels.tobytes() for t in TYPE_ORDER for i in range(10)}
    assert not reals & fakes
    assert len(fakes) == 40
