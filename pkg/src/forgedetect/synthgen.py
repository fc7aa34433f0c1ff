"""Deterministic synthetic corpus: smooth face-like "real" images and four
forgery generators with distinct frequency fingerprints.

Real images are rendered at full resolution (band-limited texture, no
upsampling).  Fakes are rendered at half resolution and brought to full size
by one of four upsamplers (nearest, bilinear, zero-insertion "checkerboard",
bilinear + coarse 8x8 DCT quantization), each leaving its own spectral
artifact.  Optional perturbation protocols: std (none), rand (exactly one of
noise/blur/quantize), mix (two or more, fixed order noise->blur->quantize).
Perturbations apply to forgeries only; real images stay clean.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import Image, save_pnm
from .spectral import dct_basis, dct2, idct2

TYPE_ORDER = ("nearest", "bilinear", "checkerboard", "blockdct")
PERTURB_MODES = ("std", "rand", "mix")
SPLIT_NAMES = ("train", "val", "test")


@dataclass
class GenSpec:
    n_real: int = 400
    n_fake_per_type: int = 200
    types: tuple = TYPE_ORDER
    perturb: str = "std"
    size: int = 192
    seed: int = 42

    def __post_init__(self):
        self.types = tuple(self.types)
        if self.n_real < 1 or self.n_fake_per_type < 1:
            raise ValueError("counts must be >= 1")
        if self.size < 128:
            raise ValueError("size must be >= 128")
        if self.perturb not in PERTURB_MODES:
            raise ValueError(f"perturb mode {self.perturb!r} not in {PERTURB_MODES}")
        unknown = set(self.types) - set(TYPE_ORDER)
        if unknown:
            raise ValueError(f"unknown forgery types {sorted(unknown)}")


def _rng(seed, *tags):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def _class_tag(type_name):
    return 0 if type_name is None else 1 + TYPE_ORDER.index(type_name)


def _band_texture(rng, n, lo=0.03, hi=0.40, std=0.09):
    """Band-limited noise synthesized directly in the DCT domain."""
    u = np.arange(n)
    band = (np.maximum(u[:, None], u[None, :]) >= lo * n) & (
        np.maximum(u[:, None], u[None, :]) < hi * n
    )
    coeffs = np.zeros((n, n))
    coeffs[band] = rng.normal(size=int(band.sum()))
    tex = idct2(coeffs)
    s = tex.std()
    return tex * (std / s) if s > 0 else tex


def _gauss_blob(yy, xx, cy, cx, sy, sx):
    return np.exp(-(((yy - cy) / sy) ** 2 + ((xx - cx) / sx) ** 2) / 2.0)


def _render_base(rng, n):
    """Smooth face-like base: radial head blob, eye/mouth shapes, texture."""
    yy, xx = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n), indexing="ij")
    j = lambda s: rng.uniform(-s, s)
    img = 0.18 + 0.05 * yy
    img += 0.55 * _gauss_blob(yy, xx, 0.48 + j(0.03), 0.50 + j(0.03),
                              0.30 + j(0.03), 0.24 + j(0.03))
    for cx in (0.34, 0.66):
        img -= 0.22 * _gauss_blob(yy, xx, 0.40 + j(0.02), cx + j(0.02),
                                  0.035 + j(0.008), 0.055 + j(0.012))
    img -= 0.18 * _gauss_blob(yy, xx, 0.70 + j(0.02), 0.50 + j(0.02),
                              0.030 + j(0.008), 0.090 + j(0.02))
    img += _band_texture(rng, n, std=0.09 + j(0.02))
    return np.clip(img, 0.0, 1.0)


def gen_real(spec, index):
    """Full-resolution render; deterministic in (seed, index)."""
    rng = _rng(spec.seed, 0, index)
    return Image(pixels=_render_base(rng, spec.size), source_id=f"real/{index:04d}")


def _upsample_nearest(a):
    return np.repeat(np.repeat(a, 2, axis=0), 2, axis=1)


def _upsample_linear_axis(a, axis):
    a = np.moveaxis(a, axis, 0)
    nxt = np.concatenate([a[1:], a[-1:]], axis=0)
    out = np.empty((2 * a.shape[0],) + a.shape[1:], dtype=a.dtype)
    out[0::2] = a
    out[1::2] = 0.5 * (a + nxt)
    return np.moveaxis(out, 0, axis)


def _upsample_bilinear(a):
    return _upsample_linear_axis(_upsample_linear_axis(a, 0), 1)


def _conv3x3_same(a, kernel):
    ap = np.pad(a, 1)
    out = np.zeros_like(a)
    for i in range(3):
        for j in range(3):
            out += kernel[i, j] * ap[i : i + a.shape[0], j : j + a.shape[1]]
    return out


_CHECKER_KERNEL = np.full((3, 3), 4.0 / 9.0)  # unity DC gain after zero insertion


def _upsample_checkerboard(a):
    z = np.zeros((2 * a.shape[0], 2 * a.shape[1]), dtype=a.dtype)
    z[0::2, 0::2] = a
    return _conv3x3_same(z, _CHECKER_KERNEL)


def _block_dct_quantize(a, q0=0.08):
    """Coarse 8x8 DCT coefficient quantization (JPEG-style blocking)."""
    n = a.shape[0]
    pad = (-n) % 8
    if pad:
        a = np.pad(a, ((0, pad), (0, pad)), mode="edge")
    m = a.shape[0] // 8
    b8 = dct_basis(8)
    blocks = a.reshape(m, 8, -1, 8).transpose(0, 2, 1, 3)
    coeffs = np.einsum("ij,abjk,lk->abil", b8, blocks, b8)
    u = np.arange(8)
    qtab = q0 * (1.0 + u[:, None] + u[None, :])
    coeffs = np.round(coeffs / qtab) * qtab
    blocks = np.einsum("ji,abjk,kl->abil", b8, coeffs, b8)
    out = blocks.transpose(0, 2, 1, 3).reshape(a.shape)
    return out[:n, :n]


def gen_fake(spec, type_name, index):
    """Half-resolution render pushed through the type's upsampler."""
    if type_name not in spec.types:
        raise ValueError(f"type {type_name!r} not in spec.types {spec.types}")
    rng = _rng(spec.seed, _class_tag(type_name), index)
    half = _render_base(rng, spec.size // 2)
    if type_name == "nearest":
        full = _upsample_nearest(half)
    elif type_name == "bilinear":
        full = _upsample_bilinear(half)
    elif type_name == "checkerboard":
        full = _upsample_checkerboard(half)
    else:  # blockdct
        full = _block_dct_quantize(_upsample_bilinear(half))
    full = full[: spec.size, : spec.size]
    return Image(
        pixels=np.clip(full, 0.0, 1.0), source_id=f"fake_{type_name}/{index:04d}"
    )


# ---------------------------------------------------------------------------
# perturbations


def _noise(pix, rng, sigma=None):
    if sigma is None:
        sigma = rng.uniform(0.01, 0.05)
    return pix + rng.normal(size=pix.shape) * sigma


def _box_blur(pix, rng=None):
    ap = np.pad(pix, 1, mode="edge")
    out = np.zeros_like(pix)
    for i in range(3):
        for j in range(3):
            out += ap[i : i + pix.shape[0], j : j + pix.shape[1]]
    return out / 9.0


def _block_quantize(pix, rng, levels=None):
    """Quantize each 8x8 block to q uniform levels between its min and max."""
    if levels is None:
        levels = int(rng.choice([4, 8]))
    n0, n1 = pix.shape
    pad0, pad1 = (-n0) % 8, (-n1) % 8
    a = np.pad(pix, ((0, pad0), (0, pad1)), mode="edge")
    m0, m1 = a.shape[0] // 8, a.shape[1] // 8
    blocks = a.reshape(m0, 8, m1, 8)
    bmin = blocks.min(axis=(1, 3), keepdims=True)
    bmax = blocks.max(axis=(1, 3), keepdims=True)
    span = np.maximum(bmax - bmin, 1e-12)
    q = np.round((blocks - bmin) / span * (levels - 1)) / (levels - 1)
    return (q * span + bmin).reshape(a.shape)[:n0, :n1]


_PERTURB_FNS = (("noise", _noise), ("blur", _box_blur), ("quantize", _block_quantize))


def perturb(img, mode, rng):
    """Apply the std/rand/mix protocol; output clamped to [0,1]."""
    if mode not in PERTURB_MODES:
        raise ValueError(f"unknown perturb mode {mode!r}")
    pix = img.pixels
    if mode == "std":
        return img
    if mode == "rand":
        chosen = {_PERTURB_FNS[int(rng.integers(len(_PERTURB_FNS)))][0]}
    else:
        names = [name for name, _ in _PERTURB_FNS]
        subsets = [set(names[:i] + names[i + 1 :]) for i in range(3)] + [set(names)]
        chosen = subsets[int(rng.integers(len(subsets)))]
    for name, fn in _PERTURB_FNS:  # fixed order: noise -> blur -> quantize
        if name in chosen:
            pix = fn(pix, rng)
    return Image(pixels=np.clip(pix, 0.0, 1.0), source_id=img.source_id)


# ---------------------------------------------------------------------------
# dataset emission


def split_counts(n):
    """Deterministic 7:1:2 partition sizes."""
    n_train = (7 * n) // 10
    n_val = n // 10
    return n_train, n_val, n - n_train - n_val


def _split_of(index, n):
    n_train, n_val, _ = split_counts(n)
    if index < n_train:
        return "train"
    if index < n_train + n_val:
        return "val"
    return "test"


def class_dirs(spec):
    return [("real", None)] + [(f"fake_{t}", t) for t in spec.types]


def generate_image(spec, type_name, index):
    """One finished corpus image (fakes get the perturbation protocol)."""
    if type_name is None:
        return gen_real(spec, index)
    img = gen_fake(spec, type_name, index)
    prng = _rng(spec.seed, 100 + _class_tag(type_name), index)
    return perturb(img, spec.perturb, prng)


def emit_dataset(spec, out_dir, force=False):
    """Write PGM tree + labels.tsv + manifest; fully determined by spec."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise FileExistsError(f"output directory {out} is not empty (use force)")
    out.mkdir(parents=True, exist_ok=True)
    labels = []
    for cls_name, type_name in class_dirs(spec):
        n = spec.n_real if type_name is None else spec.n_fake_per_type
        for split in SPLIT_NAMES:
            (out / split / cls_name).mkdir(parents=True, exist_ok=True)
        for i in range(n):
            img = generate_image(spec, type_name, i)
            rel = f"{_split_of(i, n)}/{cls_name}/{i:04d}.pgm"
            save_pnm(img, out / rel)
            labels.append((rel, 0 if type_name is None else 1, type_name or "none"))
    with open(out / "labels.tsv", "w") as fh:
        for rel, binary, tname in labels:
            fh.write(f"{rel}\t{binary}\t{tname}\n")
    manifest = {
        "n_real": spec.n_real,
        "n_fake_per_type": spec.n_fake_per_type,
        "types": ",".join(spec.types),
        "perturb": spec.perturb,
        "size": spec.size,
        "seed": spec.seed,
    }
    with open(out / "manifest.txt", "w") as fh:
        for k, v in manifest.items():
            fh.write(f"{k}={v}\n")
    return manifest


def dataset_digest(root):
    """SHA-256 over every emitted file, for determinism checks."""
    root = Path(root)
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()
