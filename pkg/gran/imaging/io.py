"""PNG reading and writing."""

import os
import os.path as osp
from typing import NamedTuple

import cv2
import numpy as np
from PIL import Image as PILImage

# Offset of the IHDR bit depth byte: signature, chunk length, type, W, H.
BIT_DEPTH_OFFSET = 24


class ImageReadError(OSError):
    """An image file is missing, unreadable or not a supported PNG."""

    def __init__(self, path: str, reason: str) -> None:
        """Keep the offending path."""
        super().__init__("{}: {}".format(path, reason))
        self.path = path


class Image(NamedTuple):
    """RGB image as a float32 (1, 3, H, W) array in [0, 1]."""

    pixels: np.ndarray
    name: str = ""

    @property
    def height(self) -> int:
        """Rows."""
        return int(self.pixels.shape[2])

    @property
    def width(self) -> int:
        """Columns."""
        return int(self.pixels.shape[3])


def from_hwc(array: np.ndarray, name: str = "") -> Image:
    """Wrap an (H, W, 3) array, clipping to [0, 1]."""
    if array.ndim != 3 or array.shape[2] != 3:
        raise ValueError(
            "expected an (H, W, 3) array, got {}".format(array.shape)
        )
    pixels = np.clip(array, 0.0, 1.0).astype(np.float32)
    return Image(pixels.transpose(2, 0, 1)[np.newaxis].copy(), name)


def to_hwc(image: Image) -> np.ndarray:
    """(H, W, 3) float32 view of the pixels."""
    return np.ascontiguousarray(image.pixels[0].transpose(1, 2, 0))


def from_nchw(array: np.ndarray, name: str = "") -> Image:
    """Wrap a (1, 3, H, W) network output, clipping to [0, 1]."""
    if array.ndim != 4 or array.shape[:2] != (1, 3):
        raise ValueError(
            "expected a (1, 3, H, W) array, got {}".format(array.shape)
        )
    return Image(np.clip(array, 0.0, 1.0).astype(np.float32), name)


def _normalize(pil_img: PILImage.Image, path: str) -> np.ndarray:
    mode = pil_img.mode
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        gray = np.asarray(pil_img, dtype=np.float64) / 65535.0
        return np.repeat(gray[:, :, np.newaxis], 3, axis=2)
    if mode == "L":
        gray = np.asarray(pil_img, dtype=np.float64) / 255.0
        return np.repeat(gray[:, :, np.newaxis], 3, axis=2)
    if mode in ("RGB", "RGBA", "P", "LA", "1"):
        rgb = np.asarray(pil_img.convert("RGB"), dtype=np.float64)
        return rgb / 255.0
    raise ImageReadError(path, "unsupported PNG mode {}".format(mode))


def _bit_depth(path: str) -> int:
    with open(path, "rb") as fp:
        header = fp.read(BIT_DEPTH_OFFSET + 1)
    if len(header) <= BIT_DEPTH_OFFSET:
        return 8
    return header[BIT_DEPTH_OFFSET]


def _read_deep_color(path: str) -> np.ndarray:
    """16-bit RGB(A) through OpenCV; PIL narrows these to 8 bits."""
    array = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if array is None or array.ndim != 3:
        raise ImageReadError(path, "cannot decode 16-bit color PNG")
    code = cv2.COLOR_BGRA2RGB if array.shape[2] == 4 else cv2.COLOR_BGR2RGB
    rgb = cv2.cvtColor(array, code)
    return rgb.astype(np.float64) / 65535.0


def load_png(path: str) -> Image:
    """Read an 8- or 16-bit PNG, dropping alpha; gray is replicated."""
    if not osp.isfile(path):
        raise ImageReadError(path, "no such file")
    try:
        with PILImage.open(path) as pil_img:
            if pil_img.format != "PNG":
                raise ImageReadError(
                    path, "not a PNG file ({})".format(pil_img.format)
                )
            if pil_img.mode in ("RGB", "RGBA") and _bit_depth(path) == 16:
                array = _read_deep_color(path)
            else:
                pil_img.load()
                array = _normalize(pil_img, path)
    except ImageReadError:
        raise
    except (OSError, ValueError, SyntaxError, cv2.error) as err:
        raise ImageReadError(path, str(err)) from err
    return from_hwc(array, osp.splitext(osp.basename(path))[0])


def quantize(image: Image) -> np.ndarray:
    """8-bit (H, W, 3) values with round-half-up."""
    values = np.clip(to_hwc(image).astype(np.float64), 0.0, 1.0)
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def save_png(image: Image, path: str) -> None:
    """Write an 8-bit RGB PNG, creating the parent directory."""
    out_dir = osp.dirname(path)
    if out_dir and not osp.exists(out_dir):
        os.makedirs(out_dir)
    PILImage.fromarray(quantize(image), "RGB").save(path, "PNG")
