"""Grayscale image container, netpbm I/O, and the nine-patch decomposition.

Images are row-major float arrays in [0,1].  PPM input is converted to
grayscale with BT.601 luma; everything downstream is single-channel so NIR
and VIS data share one code path.  No resizing happens anywhere before the
DCT -- images smaller than 128x128 are rejected instead.
"""

from dataclasses import dataclass, field

import numpy as np

PATCH_SIZE = 128

# BT.601 luma weights for PPM -> grayscale
_LUMA = np.array([0.299, 0.587, 0.114])


class PnmParseError(ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ImageSizeError(ValueError):
    pass


@dataclass
class Image:
    pixels: np.ndarray  # (h, w) float64 in [0,1]
    source_id: str = ""

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("pixel intensities must lie in [0,1]")

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


@dataclass
class PatchGrid:
    patches: list  # nine (128,128) arrays
    offsets: list  # nine (row, col) pairs, row-major over {0, mid, max}


class _TokenReader:
    """Whitespace/comment-aware tokenizer over raw netpbm header bytes."""

    def __init__(self, data):
        self.data = data
        self.pos = 0

    def token(self):
        d, n = self.data, len(self.data)
        while self.pos < n:
            ch = d[self.pos : self.pos + 1]
            if ch == b"#":
                while self.pos < n and d[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif ch.isspace():
                self.pos += 1
            else:
                break
        if self.pos >= n:
            raise PnmParseError("unexpected end of header", self.pos)
        start = self.pos
        while self.pos < n and not d[self.pos : self.pos + 1].isspace():
            self.pos += 1
        return d[start : self.pos], start

    def int_token(self):
        tok, start = self.token()
        try:
            return int(tok)
        except ValueError:
            raise PnmParseError(f"expected integer, got {tok!r}", start) from None


def load_pnm(path):
    """Read an ASCII or binary PGM/PPM (P2/P3/P5/P6) as a grayscale Image."""
    with open(path, "rb") as fh:
        data = fh.read()
    rd = _TokenReader(data)
    magic, off = rd.token()
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise PnmParseError(f"unsupported magic {magic!r}", off)
    width = rd.int_token()
    height = rd.int_token()
    maxval = rd.int_token()
    if width <= 0 or height <= 0:
        raise PnmParseError(f"bad dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise PnmParseError(f"maxval {maxval} outside [1, 65535]")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels

    if magic in (b"P2", b"P3"):
        vals = np.empty(count, dtype=np.float64)
        for i in range(count):
            vals[i] = rd.int_token()
    else:
        rd.pos += 1  # single whitespace byte after maxval
        itemsize = 2 if maxval > 255 else 1
        need = count * itemsize
        raw = data[rd.pos : rd.pos + need]
        if len(raw) < need:
            raise PnmParseError(
                f"truncated pixel data: need {need} bytes, have {len(raw)}", rd.pos
            )
        dtype = ">u2" if itemsize == 2 else np.uint8
        vals = np.frombuffer(raw, dtype=dtype).astype(np.float64)

    if vals.max(initial=0.0) > maxval:
        raise PnmParseError(f"sample exceeds maxval {maxval}")
    vals /= maxval
    if channels == 3:
        vals = vals.reshape(height, width, 3) @ _LUMA
    else:
        vals = vals.reshape(height, width)
    return Image(pixels=np.clip(vals, 0.0, 1.0), source_id=str(path))


def save_pnm(img, path):
    """Write as 8-bit binary PGM (P5)."""
    quant = np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(quant.tobytes())


def patch_offsets(height, width):
    """Row/col anchors {0, floor((n-128)/2), n-128} for the 3x3 patch grid."""
    if height < PATCH_SIZE or width < PATCH_SIZE:
        raise ImageSizeError(
            f"image {height}x{width} smaller than {PATCH_SIZE}x{PATCH_SIZE}; no resizing is done"
        )
    rows = (0, (height - PATCH_SIZE) // 2, height - PATCH_SIZE)
    cols = (0, (width - PATCH_SIZE) // 2, width - PATCH_SIZE)
    return [(r, c) for r in rows for c in cols]


def extract_patches(img):
    """The nine 128x128 patches: corners, edge midpoints, and center."""
    offsets = patch_offsets(img.height, img.width)
    patches = [
        img.pixels[r : r + PATCH_SIZE, c : c + PATCH_SIZE] for r, c in offsets
    ]
    return PatchGrid(patches=patches, offsets=offsets)
