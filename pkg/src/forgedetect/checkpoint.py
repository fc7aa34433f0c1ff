"""Binary section-format checkpoint files.

Layout (all little-endian):
  magic "HFCM" | version u32 | section count u32 | per section:
  name length u16, UTF-8 name, dtype code u8 (0=f32, 1=f64), rank u8,
  dims u32 each, raw data.

Section names are stable, e.g. ``stage1.freq.backbone.conv0.weight`` or
``spectral.stats.mean``.  Round trips are bit-identical.
"""

import struct

import numpy as np

MAGIC = b"HFCM"
VERSION = 1

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}


class CheckpointError(ValueError):
    pass


def write_sections(path, sections):
    """``sections``: ordered mapping name -> float32/float64 ndarray."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(sections)))
        for name, arr in sections.items():
            arr = np.asarray(arr)
            if arr.dtype not in _CODES:
                arr = arr.astype("<f8")
            code = _CODES[arr.dtype.newbyteorder("<")]
            data = np.ascontiguousarray(arr, dtype=_DTYPES[code])
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<BB", code, arr.ndim))
            for d in arr.shape:
                fh.write(struct.pack("<I", d))
            fh.write(data.tobytes())


def read_sections(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < 12:
        raise CheckpointError("truncated file: header incomplete")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unknown checkpoint version {version}")
    pos = 12
    sections = {}
    for i in range(count):
        label = f"section {i}"
        try:
            (name_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            name = blob[pos : pos + name_len].decode("utf-8")
            if len(blob[pos : pos + name_len]) < name_len:
                raise struct.error
            label = name
            pos += name_len
            code, rank = struct.unpack_from("<BB", blob, pos)
            pos += 2
            if code not in _DTYPES:
                raise CheckpointError(f"section {name}: unknown dtype code {code}")
            dims = struct.unpack_from(f"<{rank}I", blob, pos) if rank else ()
            pos += 4 * rank
            n = int(np.prod(dims, dtype=np.int64)) if rank else 1
            nbytes = n * _DTYPES[code].itemsize
            raw = blob[pos : pos + nbytes]
            if len(raw) < nbytes:
                raise struct.error
            pos += nbytes
        except struct.error:
            raise CheckpointError(f"truncated file inside {label}") from None
        sections[name] = np.frombuffer(raw, dtype=_DTYPES[code]).reshape(dims).copy()
    return sections
