"""forgedetect: patch-based hybrid image/frequency face-forgery detection.

Nine overlapping 128x128 patches per face, DCT-normalized frequency features,
SIFT-style keypoint descriptors, attention-based token fusion, and a
two-stage detect-then-trace classifier with learnable score fusion weights.
"""

__version__ = "0.1.0"
