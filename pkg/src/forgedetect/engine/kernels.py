"""Kernel backend selection: compiled Cython core with a numpy fallback.

Set FORGEDETECT_PURE=1 to force the numpy implementations.
"""

import os

from . import kernels_numpy

if os.environ.get("FORGEDETECT_PURE") == "1":
    _impl = kernels_numpy
    COMPILED = False
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        _impl = kernels_numpy
        COMPILED = False

conv_out_size = kernels_numpy.conv_out_size
im2col = _impl.im2col
col2im = _impl.col2im
sift_hist = _impl.sift_hist
