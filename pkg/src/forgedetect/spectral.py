"""Orthonormal 2-D type-II DCT and real-image spectrum normalization.

The transform is separable via a precomputed N x N cosine basis matrix, so
Parseval holds exactly up to rounding and the inverse is the transpose.
Spectrum statistics (per-coefficient mean/variance over real training
patches) feed the normalization (coeff - mean) / sqrt(var).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

VAR_FLOOR = 1e-8


@lru_cache(maxsize=8)
def dct_basis(n):
    """Orthonormal DCT-II basis matrix B with rows B[k] = c_k cos(pi(2j+1)k/2n)."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    basis = np.cos(np.pi * (2 * j + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    basis[0] = np.sqrt(1.0 / n)
    return basis


def dct2(patch):
    """2-D orthonormal DCT-II of a square patch (rows then columns)."""
    patch = np.asarray(patch, dtype=np.float64)
    h, w = patch.shape
    if h != w:
        raise ValueError(f"dct2 expects a square patch, got {h}x{w}")
    basis = dct_basis(h)
    return basis @ patch @ basis.T


def idct2(coeffs):
    """Inverse of dct2 (orthonormal, so the transpose basis)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    basis = dct_basis(coeffs.shape[0])
    return basis.T @ coeffs @ basis


@dataclass
class SpectrumStats:
    mean: np.ndarray
    var: np.ndarray  # floored at VAR_FLOOR
    n_samples: int


def fit_spectrum_stats(real_patches):
    """Per-coefficient mean and population variance of real patches' spectra.

    Stats are pooled over all provided patches regardless of patch slot;
    accumulation is streaming so the input may be any iterable of patches.
    """
    n = 0
    s1 = s2 = None
    for p in real_patches:
        c = dct2(p)
        if s1 is None:
            s1, s2 = np.zeros_like(c), np.zeros_like(c)
        s1 += c
        s2 += c * c
        n += 1
    if n == 0:
        raise ValueError("fit_spectrum_stats needs at least one patch")
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    return SpectrumStats(mean=mean, var=np.maximum(var, VAR_FLOOR), n_samples=n)


def normalize_spectrum(coeffs, stats):
    """Elementwise (coeffs - mean) / sqrt(var)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != stats.mean.shape:
        raise ValueError(f"spectrum shape {coeffs.shape} != stats shape {stats.mean.shape}")
    return (coeffs - stats.mean) / np.sqrt(stats.var)


def nyquist_band_mask(n, frac=0.125):
    """Boolean mask selecting the highest-frequency rows and columns."""
    lo = n - max(int(round(n * frac)), 1)
    mask = np.zeros((n, n), dtype=bool)
    mask[lo:, :] = True
    mask[:, lo:] = True
    return mask


def nyquist_band_mean(coeffs, frac=0.125):
    """Mean |coefficient| over the Nyquist band (top rows/cols union)."""
    coeffs = np.asarray(coeffs)
    return float(np.abs(coeffs)[nyquist_band_mask(coeffs.shape[0], frac)].mean())


def band_baseline(stats, frac=0.125):
    """RMS coefficient magnitude of the fitted real population in the band."""
    mask = nyquist_band_mask(stats.mean.shape[0], frac)
    rms = np.sqrt(stats.mean**2 + stats.var)
    return float(rms[mask].mean())
