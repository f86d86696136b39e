"""Luma extraction in the BT.601 YCbCr space."""

import numpy as np
from skimage.color import rgb2ycbcr

from .io import Image, to_hwc

FULL_SWING = np.array([0.299, 0.587, 0.114])


def rgb_to_y(image: Image, full_swing: bool = False) -> np.ndarray:
    """(1, 1, H, W) float64 luma in [0, 1].

    Studio swing maps black to 16/255 and white to 235/255. Full swing uses
    the plain 0.299/0.587/0.114 weights.
    """
    rgb = to_hwc(image).astype(np.float64)
    if full_swing:
        luma = rgb @ FULL_SWING
    else:
        luma = rgb2ycbcr(rgb)[..., 0] / 255.0
    return luma[np.newaxis, np.newaxis]
