"""68-point keypoint layouts: canonical face template plus file import.

The canonical template stands in for an external landmark detector.  It is a
fixed face-like arrangement (17 jaw, 10 brow, 9 nose, 12 eye, 20 mouth
points) in unit coordinates, recentered on its centroid and mapped into the
central [0.1, 0.9] box of the target image, so descriptor windows always fit.
"""

from dataclasses import dataclass

import numpy as np

N_KEYPOINTS = 68
BORDER_MARGIN = 8  # SIFT window half-size


class KeypointFormatError(ValueError):
    pass


@dataclass
class KeypointSet:
    points: np.ndarray  # (68, 2) float64 (row, col)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.shape != (N_KEYPOINTS, 2):
            raise ValueError(f"expected {N_KEYPOINTS} keypoints, got {self.points.shape}")


def _unit_template():
    """Face-like template in unit (row, col) coordinates, centroid at (0.5, 0.5)."""
    pts = []
    # jaw arc: left ear -> chin -> right ear
    for i in range(17):
        phi = np.pi * i / 16.0
        pts.append((0.42 + 0.40 * np.sin(phi), 0.5 - 0.42 * np.cos(phi)))
    # brows, 5 points each, slightly arched
    for side in (-1.0, 1.0):
        for i in range(5):
            t = i / 4.0
            pts.append((0.30 - 0.04 * np.sin(np.pi * t), 0.5 + side * (0.15 + 0.20 * t)))
    # nose: 4 bridge + 5 base
    for i in range(4):
        pts.append((0.36 + 0.05 * i, 0.5))
    for i in range(5):
        pts.append((0.56, 0.42 + 0.04 * i))
    # eyes: two hexagons of 6 points
    for side in (-1.0, 1.0):
        for i in range(6):
            ang = 2 * np.pi * i / 6.0
            pts.append((0.38 + 0.03 * np.sin(ang), 0.5 + side * 0.22 + 0.06 * np.cos(ang)))
    # mouth: 12 outer + 8 inner ellipse points
    for i in range(12):
        ang = 2 * np.pi * i / 12.0
        pts.append((0.70 + 0.05 * np.sin(ang), 0.5 + 0.13 * np.cos(ang)))
    for i in range(8):
        ang = 2 * np.pi * i / 8.0
        pts.append((0.70 + 0.02 * np.sin(ang), 0.5 + 0.08 * np.cos(ang)))
    pts = np.asarray(pts)
    pts += np.array([0.5, 0.5]) - pts.mean(axis=0)
    return np.clip(pts, 0.0, 1.0)


_TEMPLATE = _unit_template()


def canonical_keypoints(height, width):
    """Scale the fixed template into [0.1h, 0.9h] x [0.1w, 0.9w]."""
    if height < 64 or width < 64:
        raise ValueError("canonical_keypoints requires height, width >= 64")
    scale = np.array([height, width], dtype=np.float64)
    return KeypointSet(points=(0.1 + 0.8 * _TEMPLATE) * scale)


def import_keypoints(path, height, width):
    """Read 68 'row col' lines; out-of-margin points are clamped to the margin."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise KeypointFormatError(f"expected 'row col', got {line!r}")
            rows.append((float(parts[0]), float(parts[1])))
    if len(rows) != N_KEYPOINTS:
        raise KeypointFormatError(f"expected {N_KEYPOINTS} keypoint lines, got {len(rows)}")
    pts = np.asarray(rows, dtype=np.float64)
    pts[:, 0] = np.clip(pts[:, 0], BORDER_MARGIN, height - 1 - BORDER_MARGIN)
    pts[:, 1] = np.clip(pts[:, 1], BORDER_MARGIN, width - 1 - BORDER_MARGIN)
    return KeypointSet(points=pts)
