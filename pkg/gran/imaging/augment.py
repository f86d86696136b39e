"""Rotation and flip augmentation.

Variant v rotates by 90 * (v % 4) degrees counter-clockwise and then, if
v >= 4, flips horizontally. The eight variants form the dihedral group of
the square, so every variant has an inverse and any two compose to a third.
"""

import numpy as np

from .io import Image

NUM_VARIANTS = 8


def _check(variant: int) -> None:
    if not 0 <= variant < NUM_VARIANTS:
        raise ValueError(
            "augmentation variant must lie in [0, {}), got {}".format(
                NUM_VARIANTS, variant
            )
        )


def augment_array(array: np.ndarray, variant: int) -> np.ndarray:
    """Permute the last two axes of `array` according to `variant`."""
    _check(variant)
    out = np.rot90(array, variant % 4, axes=(-2, -1))
    if variant >= 4:
        out = np.flip(out, axis=-1)
    return np.ascontiguousarray(out)


def augment(image: Image, variant: int) -> Image:
    """Exact pixel permutation of `image`."""
    return Image(augment_array(image.pixels, variant), image.name)


def compose(first: int, second: int) -> int:
    """Variant equal to applying `first` and then `second`."""
    _check(first)
    _check(second)
    flip = (first >= 4) != (second >= 4)
    turns = second % 4
    if first >= 4:
        turns = -turns
    return (first % 4 + turns) % 4 + (4 if flip else 0)


def invert(variant: int) -> int:
    """Variant undoing `variant`."""
    _check(variant)
    if variant >= 4:
        return variant
    return (4 - variant) % 4
