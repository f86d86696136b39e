"""Image files, color conversion, resizing and training patches."""

from .augment import augment, compose, invert
from .color import rgb_to_y
from .io import Image, ImageReadError, load_png, save_png
from .patches import PatchPair, PatchSource, degrade, sample_patches
from .resize import bicubic_resize, modcrop

__all__ = [
    "Image",
    "ImageReadError",
    "PatchPair",
    "PatchSource",
    "augment",
    "bicubic_resize",
    "compose",
    "degrade",
    "invert",
    "load_png",
    "modcrop",
    "rgb_to_y",
    "sample_patches",
    "save_png",
]
