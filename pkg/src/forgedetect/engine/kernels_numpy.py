"""Pure numpy implementations of the hot kernels.

Used as the fallback when the compiled extension is unavailable (or when
FORGEDETECT_PURE=1).  Must stay numerically identical to the Cython versions.
"""

import numpy as np


def conv_out_size(n, k, stride, pad):
    return (n + 2 * pad - k) // stride + 1


def im2col(x, k, stride, pad):
    """Unfold (B,C,H,W) into a (B*OH*OW, C*k*k) column matrix."""
    b, c, h, w = x.shape
    oh = conv_out_size(h, k, stride, pad)
    ow = conv_out_size(w, k, stride, pad)
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    s0, s1, s2, s3 = x.strides
    view = np.lib.stride_tricks.as_strided(
        x, (b, c, oh, ow, k, k), (s0, s1, s2 * stride, s3 * stride, s2, s3)
    )
    return np.ascontiguousarray(view.transpose(0, 2, 3, 1, 4, 5)).reshape(b * oh * ow, c * k * k)


def col2im(cols, x_shape, k, stride, pad):
    """Scatter-add columns back onto an input-shaped array (adjoint of im2col)."""
    b, c, h, w = x_shape
    oh = conv_out_size(h, k, stride, pad)
    ow = conv_out_size(w, k, stride, pad)
    cols6 = cols.reshape(b, oh, ow, c, k, k).transpose(0, 3, 1, 2, 4, 5)
    xp = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            xp[:, :, i : i + oh * stride : stride, j : j + ow * stride : stride] += cols6[
                :, :, :, :, i, j
            ]
    if pad:
        return np.ascontiguousarray(xp[:, :, pad : pad + h, pad : pad + w])
    return xp


def sift_hist(mag, ori, weight):
    """Accumulate a 4x4-cell x 8-orientation-bin histogram over a 16x16 window.

    ``ori`` is in radians [0, 2pi); each pixel splits its (Gaussian-weighted)
    magnitude between the two nearest orientation bins.
    """
    w = (mag * weight).ravel()
    t = ori.ravel() * (8.0 / (2.0 * np.pi))
    b0 = np.floor(t)
    frac = t - b0
    b0 = b0.astype(np.int64) % 8
    b1 = (b0 + 1) % 8
    rows, cols = np.indices((16, 16))
    cell = ((rows // 4) * 4 + cols // 4).ravel()
    hist = np.zeros(128)
    np.add.at(hist, cell * 8 + b0, w * (1.0 - frac))
    np.add.at(hist, cell * 8 + b1, w * frac)
    return hist
