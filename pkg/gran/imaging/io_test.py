"""Test cases for io.py."""
import os.path as osp
import shutil
import tempfile
import unittest

import cv2
import numpy as np
from PIL import Image as PILImage

from .io import (
    Image,
    ImageReadError,
    from_hwc,
    load_png,
    quantize,
    save_png,
    to_hwc,
)


class TestPNG(unittest.TestCase):
    """Test cases for PNG reading and writing."""

    def setUp(self) -> None:
        """Scratch directory."""
        self.tmp_dir = tempfile.mkdtemp()
        self.rng = np.random.default_rng(0)

    def tearDown(self) -> None:
        """Remove the scratch directory."""
        shutil.rmtree(self.tmp_dir)

    def write(self, array: np.ndarray, name: str) -> str:
        """Save `array` with PIL and return the path."""
        path = osp.join(self.tmp_dir, name)
        PILImage.fromarray(array).save(path)
        return path

    def test_rgb(self) -> None:
        """8-bit values are divided by 255."""
        array = self.rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
        array[0, 0] = 255
        image = load_png(self.write(array, "rgb.png"))
        self.assertEqual(image.pixels.shape, (1, 3, 5, 7))
        self.assertEqual(image.pixels.dtype, np.float32)
        self.assertEqual(image.name, "rgb")
        np.testing.assert_array_equal(image.pixels[0, :, 0, 0], 1.0)
        np.testing.assert_allclose(
            to_hwc(image), array / 255.0, rtol=0, atol=1e-7
        )

    def test_round_trip(self) -> None:
        """load, save, load of an 8-bit PNG is value-identical."""
        array = self.rng.integers(0, 256, (6, 4, 3), dtype=np.uint8)
        first = load_png(self.write(array, "a.png"))
        path = osp.join(self.tmp_dir, "out", "b.png")
        save_png(first, path)
        second = load_png(path)
        np.testing.assert_array_equal(first.pixels, second.pixels)
        np.testing.assert_array_equal(quantize(second), array)

    def test_gray(self) -> None:
        """Gray PNGs are replicated to three channels."""
        array = self.rng.integers(0, 256, (4, 4), dtype=np.uint8)
        image = load_png(self.write(array, "gray.png"))
        for channel in range(3):
            np.testing.assert_allclose(
                image.pixels[0, channel], array / 255.0, atol=1e-7
            )

    def test_16_bit(self) -> None:
        """16-bit values are divided by 65535."""
        array = np.array([[0, 65535], [32768, 1000]], dtype=np.uint16)
        image = load_png(self.write(array, "deep.png"))
        np.testing.assert_allclose(
            image.pixels[0, 1], array / 65535.0, atol=1e-7
        )

    def test_16_bit_color(self) -> None:
        """16-bit RGB and RGBA keep their full depth."""
        rgb = self.rng.integers(0, 65536, (3, 5, 3), dtype=np.uint16)
        rgb[0, 0] = [1000, 65535, 1]
        alpha = np.full((3, 5, 1), 40000, dtype=np.uint16)
        rgba = np.concatenate([rgb, alpha], axis=2)
        for name, array, code in [
            ("rgb16.png", rgb, cv2.COLOR_RGB2BGR),
            ("rgba16.png", rgba, cv2.COLOR_RGBA2BGRA),
        ]:
            path = osp.join(self.tmp_dir, name)
            self.assertTrue(cv2.imwrite(path, cv2.cvtColor(array, code)))
            image = load_png(path)
            np.testing.assert_allclose(
                to_hwc(image), rgb / 65535.0, atol=1e-7, err_msg=name
            )

    def test_alpha_dropped(self) -> None:
        """RGBA loads as RGB."""
        array = self.rng.integers(0, 256, (3, 3, 4), dtype=np.uint8)
        image = load_png(self.write(array, "alpha.png"))
        np.testing.assert_allclose(
            to_hwc(image), array[:, :, :3] / 255.0, atol=1e-7
        )

    def test_round_half_up(self) -> None:
        """Saving rounds halves up and clips out-of-range values."""
        row = np.array([0.5, 1.49 / 255, -0.2])
        image = Image(np.tile(row, (1, 3, 1, 1)))
        np.testing.assert_array_equal(quantize(image)[0, :, 0], [128, 1, 0])

    def test_clip_on_wrap(self) -> None:
        """Wrapping clamps to [0, 1]."""
        image = from_hwc(np.full((2, 2, 3), 1.5))
        np.testing.assert_array_equal(image.pixels, 1.0)

    def test_errors(self) -> None:
        """Missing and invalid files name the path."""
        missing = osp.join(self.tmp_dir, "missing.png")
        with self.assertRaises(ImageReadError) as ctx:
            load_png(missing)
        self.assertEqual(ctx.exception.path, missing)
        self.assertIn("missing.png", str(ctx.exception))

        broken = osp.join(self.tmp_dir, "broken.png")
        with open(broken, "wb") as fp:
            fp.write(b"not an image")
        with self.assertRaises(ImageReadError):
            load_png(broken)

        jpeg = osp.join(self.tmp_dir, "photo.png")
        PILImage.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(
            jpeg, "JPEG"
        )
        with self.assertRaises(ImageReadError):
            load_png(jpeg)


if __name__ == "__main__":
    unittest.main()
