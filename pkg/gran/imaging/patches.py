"""Aligned low/high resolution training patches."""

from typing import List, NamedTuple, Optional

import numpy as np

from .io import Image
from .resize import bicubic_resize, modcrop


class PatchPair(NamedTuple):
    """LR patch (1, 3, p, p) and the HR patch (1, 3, sp, sp) it covers."""

    lr: np.ndarray
    hr: np.ndarray


class PatchSource(NamedTuple):
    """An HR image with its bicubic LR counterpart."""

    lr: Image
    hr: Image
    scale: int


def degrade(hr: Image, scale: int) -> PatchSource:
    """Modcrop `hr` and shrink it by `scale`."""
    cropped = modcrop(hr, scale)
    lr = bicubic_resize(
        cropped, size=(cropped.height // scale, cropped.width // scale)
    )
    return PatchSource(lr, cropped, scale)


def crop_pair(source: PatchSource, y: int, x: int, patch: int) -> PatchPair:
    """LR window at (y, x) and the HR window at (s * y, s * x)."""
    s = source.scale
    lr = source.lr.pixels[:, :, y : y + patch, x : x + patch]
    hr = source.hr.pixels[
        :, :, s * y : s * (y + patch), s * x : s * (x + patch)
    ]
    return PatchPair(lr.copy(), hr.copy())


def random_pair(
    source: PatchSource, patch: int, rng: np.random.Generator
) -> PatchPair:
    """One uniformly placed pair."""
    if source.lr.height < patch or source.lr.width < patch:
        raise ValueError(
            "{}: LR image {}x{} is smaller than the {}px patch".format(
                source.hr.name or "image",
                source.lr.height,
                source.lr.width,
                patch,
            )
        )
    y = int(rng.integers(0, source.lr.height - patch + 1))
    x = int(rng.integers(0, source.lr.width - patch + 1))
    return crop_pair(source, y, x, patch)


def sample_patches(
    hr: Image,
    scale: int,
    patch: int = 48,
    count: int = 1,
    seed: int = 0,
    source: Optional[PatchSource] = None,
) -> List[PatchPair]:
    """`count` random aligned pairs, deterministic from `seed`."""
    if count < 0:
        raise ValueError("count must be non-negative, got {}".format(count))
    if source is None:
        source = degrade(hr, scale)
    rng = np.random.default_rng(seed)
    return [random_pair(source, patch, rng) for _ in range(count)]
