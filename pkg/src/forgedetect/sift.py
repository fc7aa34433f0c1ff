"""Upright fixed-scale SIFT-style descriptors anchored at given keypoints.

No scale space and no dominant-orientation estimation: keypoints come from a
landmark layout, so the descriptor geometry is fixed (16x16 window, 4x4
spatial cells, 8 orientation bins, Gaussian weighting sigma=8, Lowe's 0.2
clipping).  Gradients are central differences inside the window (one-sided
at the window edges).
"""

import numpy as np

from .engine import kernels
from .keypoints import KeypointSet, canonical_keypoints

WINDOW = 16
HALF = WINDOW // 2
N_BINS = 8
CLIP = 0.2
SIGMA = 8.0
DESCRIPTOR_DIM = 128


def _gauss_window():
    g = np.arange(WINDOW) - (WINDOW - 1) / 2.0
    w = np.exp(-(g * g) / (2.0 * SIGMA * SIGMA))
    return np.outer(w, w)


_GAUSS = _gauss_window()


def sift_descriptor(pixels, keypoint):
    """128-vector descriptor of the 16x16 window centered (rounded) at keypoint."""
    r = int(round(float(keypoint[0])))
    c = int(round(float(keypoint[1])))
    h, w = pixels.shape
    r0, c0 = r - HALF, c - HALF
    if r0 < 0 or c0 < 0 or r0 + WINDOW > h or c0 + WINDOW > w:
        raise ValueError(f"descriptor window at ({r},{c}) out of bounds for {h}x{w}")
    window = np.asarray(pixels[r0 : r0 + WINDOW, c0 : c0 + WINDOW], dtype=np.float64)
    grad_r, grad_c = np.gradient(window)
    mag = np.hypot(grad_r, grad_c)
    ori = np.mod(np.arctan2(grad_r, grad_c), 2.0 * np.pi)
    hist = kernels.sift_hist(mag, ori, _GAUSS)
    norm = np.linalg.norm(hist)
    if norm == 0.0:
        return hist
    hist = np.minimum(hist / norm, CLIP)
    return hist / np.linalg.norm(hist)


def extract_handcrafted(img, keypoints=None):
    """68x128 token matrix, one descriptor row per keypoint in order."""
    if keypoints is None:
        keypoints = canonical_keypoints(img.height, img.width)
    if not isinstance(keypoints, KeypointSet):
        keypoints = KeypointSet(points=keypoints)
    return np.stack([sift_descriptor(img.pixels, kp) for kp in keypoints.points])
