"""Bicubic resizing with the conventions of MATLAB's imresize.

The Keys cubic kernel (a = -0.5) is used. When shrinking, the kernel is
stretched by 1 / scale, which low-pass filters the input. Out-of-range
taps are mirrored about the border, and every output pixel's weights are
normalized to sum to one. The two axes are resized one after the other
in float64 without intermediate rounding.
"""

import math
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np

from .io import Image, from_nchw

Scale = Union[int, float, Fraction]

KERNEL_WIDTH = 4.0


def cubic(x: np.ndarray) -> np.ndarray:
    """Keys cubic convolution kernel with a = -0.5."""
    absx = np.abs(x)
    absx2 = absx * absx
    absx3 = absx2 * absx
    near = (1.5 * absx3 - 2.5 * absx2 + 1.0) * (absx <= 1)
    far = (-0.5 * absx3 + 2.5 * absx2 - 4.0 * absx + 2.0) * (
        (absx > 1) & (absx <= 2)
    )
    return near + far


def output_length(length: int, scale: Scale) -> int:
    """ceil(length * scale), computed exactly for rational scales."""
    return int(math.ceil(Fraction(scale) * length))


def resize_weights(
    in_length: int, out_length: int, scale: float, antialias: bool = True
) -> np.ndarray:
    """(out_length, in_length) matrix applying the resize along one axis."""
    if in_length < 1 or out_length < 1:
        raise ValueError(
            "resize lengths must be positive, got {} -> {}".format(
                in_length, out_length
            )
        )
    width = KERNEL_WIDTH
    shrink = antialias and scale < 1
    if shrink:
        width /= scale

    # 1-based output coordinates mapped into the input
    x = np.arange(1, out_length + 1, dtype=np.float64)
    u = x / scale + 0.5 * (1.0 - 1.0 / scale)
    left = np.floor(u - width / 2.0)
    taps = int(math.ceil(width)) + 2
    indices = left[:, np.newaxis] + np.arange(taps)[np.newaxis, :]
    distance = u[:, np.newaxis] - indices
    if shrink:
        weights = scale * cubic(scale * distance)
    else:
        weights = cubic(distance)
    weights /= weights.sum(axis=1, keepdims=True)

    mirror = np.concatenate(
        [np.arange(in_length), np.arange(in_length - 1, -1, -1)]
    )
    columns = mirror[np.mod(indices.astype(np.int64) - 1, 2 * in_length)]
    rows = np.repeat(np.arange(out_length), taps)
    matrix = np.zeros((out_length, in_length))
    np.add.at(matrix, (rows, columns.reshape(-1)), weights.reshape(-1))
    return matrix


def _target(
    hw: Tuple[int, int],
    scale: Optional[Scale],
    size: Optional[Tuple[int, int]],
) -> Tuple[Tuple[int, int], Tuple[float, float]]:
    if (scale is None) == (size is None):
        raise ValueError("give exactly one of scale and size")
    if size is None:
        assert scale is not None
        if Fraction(scale) <= 0:
            raise ValueError("scale must be positive, got {}".format(scale))
        out = (output_length(hw[0], scale), output_length(hw[1], scale))
        factors = (float(scale), float(scale))
    else:
        out = (int(size[0]), int(size[1]))
        factors = (out[0] / hw[0], out[1] / hw[1])
    if out[0] < 1 or out[1] < 1:
        raise ValueError(
            "resize of {}x{} gives a degenerate {}x{} output".format(
                hw[0], hw[1], out[0], out[1]
            )
        )
    return out, factors


def resize_array(
    array: np.ndarray,
    scale: Optional[Scale] = None,
    size: Optional[Tuple[int, int]] = None,
    antialias: bool = True,
) -> np.ndarray:
    """Resize the last two axes of `array`, returning float64 values."""
    height, width = array.shape[-2:]
    out, factors = _target((height, width), scale, size)
    rows = resize_weights(height, out[0], factors[0], antialias)
    cols = resize_weights(width, out[1], factors[1], antialias)
    values = np.asarray(array, dtype=np.float64)
    values = np.einsum("oh,...hw->...ow", rows, values)
    return np.einsum("pw,...hw->...hp", cols, values)


def bicubic_resize(
    image: Image,
    scale: Optional[Scale] = None,
    size: Optional[Tuple[int, int]] = None,
) -> Image:
    """Resize by a rational `scale` or to an explicit (H, W) `size`."""
    resized = resize_array(image.pixels, scale, size)
    return from_nchw(resized, image.name)


def modcrop(image: Image, scale: int) -> Image:
    """Trim height and width down to multiples of `scale`."""
    height = image.height - image.height % scale
    width = image.width - image.width % scale
    if height < 1 or width < 1:
        raise ValueError(
            "{}x{} image is smaller than the scale {}".format(
                image.height, image.width, scale
            )
        )
    return Image(image.pixels[:, :, :height, :width].copy(), image.name)
