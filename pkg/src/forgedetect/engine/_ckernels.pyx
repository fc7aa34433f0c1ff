# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: im2col / col2im gathers and SIFT histogram binning.

Numerically identical to forgedetect.engine.kernels_numpy.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def conv_out_size(long n, long k, long stride, long pad):
    return (n + 2 * pad - k) // stride + 1


def im2col(cnp.ndarray x, long k, long stride, long pad):
    cdef long b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef long oh = (h + 2 * pad - k) // stride + 1
    cdef long ow = (w + 2 * pad - k) // stride + 1
    cdef cnp.ndarray out_arr = np.empty((b * oh * ow, c * k * k), dtype=np.float64)
    cdef double[:, :, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef long ib, ic, io, jo, ki, kj, row, col, ri, cj
    for ib in range(b):
        for io in range(oh):
            for jo in range(ow):
                row = (ib * oh + io) * ow + jo
                for ic in range(c):
                    for ki in range(k):
                        ri = io * stride + ki - pad
                        for kj in range(k):
                            cj = jo * stride + kj - pad
                            col = (ic * k + ki) * k + kj
                            if 0 <= ri < h and 0 <= cj < w:
                                out[row, col] = xv[ib, ic, ri, cj]
                            else:
                                out[row, col] = 0.0
    return out_arr


def col2im(cnp.ndarray cols, x_shape, long k, long stride, long pad):
    cdef long b = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3]
    cdef long oh = (h + 2 * pad - k) // stride + 1
    cdef long ow = (w + 2 * pad - k) // stride + 1
    cdef cnp.ndarray out_arr = np.zeros((b, c, h, w), dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(cols, dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef long ib, ic, io, jo, ki, kj, row, col, ri, cj
    for ib in range(b):
        for io in range(oh):
            for jo in range(ow):
                row = (ib * oh + io) * ow + jo
                for ic in range(c):
                    for ki in range(k):
                        ri = io * stride + ki - pad
                        if ri < 0 or ri >= h:
                            continue
                        for kj in range(k):
                            cj = jo * stride + kj - pad
                            if cj < 0 or cj >= w:
                                continue
                            col = (ic * k + ki) * k + kj
                            out[ib, ic, ri, cj] += cv[row, col]
    return out_arr


def sift_hist(cnp.ndarray mag, cnp.ndarray ori, cnp.ndarray weight):
    cdef cnp.ndarray hist_arr = np.zeros(128, dtype=np.float64)
    cdef double[::1] hist = hist_arr
    cdef double[:, ::1] mv = np.ascontiguousarray(mag, dtype=np.float64)
    cdef double[:, ::1] ov = np.ascontiguousarray(ori, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(weight, dtype=np.float64)
    cdef long r, c, cell, b0, b1
    cdef double w, t, frac
    cdef double two_pi = 6.283185307179586476925287
    for r in range(16):
        for c in range(16):
            w = mv[r, c] * wv[r, c]
            t = ov[r, c] * (8.0 / two_pi)
            frac = t - floor(t)
            b0 = (<long> floor(t)) % 8
            if b0 < 0:
                b0 += 8
            b1 = (b0 + 1) % 8
            cell = (r // 4) * 4 + c // 4
            hist[cell * 8 + b0] += w * (1.0 - frac)
            hist[cell * 8 + b1] += w * frac
    return hist_arr
