"""Test cases for dataset.py."""
import os.path as osp
import shutil
import tempfile
import unittest

import numpy as np

from ..imaging.io import Image, save_png
from ..imaging.patches import degrade
from .dataset import PatchDataset


def random_image(rng: np.random.Generator, height: int, width: int) -> Image:
    """Uniform noise image."""
    pixels = rng.uniform(0, 1, (1, 3, height, width)).astype(np.float32)
    return Image(pixels, "noise")


class TestPatchDataset(unittest.TestCase):
    """Test cases for batch sampling."""

    rng = np.random.default_rng(0)

    def make(self, seed: int = 7, **kwargs: int) -> PatchDataset:
        """Three small images at x2."""
        sources = [
            degrade(random_image(self.rng, 40 + 4 * i, 36), 2)
            for i in range(3)
        ]
        return PatchDataset(sources, seed=seed, **kwargs)

    def test_shapes(self) -> None:
        """Batches stack LR and HR patches."""
        dataset = self.make(patch_size=8, batch_size=5)
        batch = dataset.batch(0)
        self.assertEqual(batch.lr.shape, (5, 3, 8, 8))
        self.assertEqual(batch.hr.shape, (5, 3, 16, 16))
        self.assertEqual(batch.lr.dtype, np.float32)
        self.assertEqual(dataset.scale, 2)
        self.assertEqual(len(dataset), 3)

    def test_pure_in_step(self) -> None:
        """A batch depends on the step, not on call order."""
        dataset = self.make(patch_size=8, batch_size=4)
        late = dataset.batch(5)
        dataset.batch(0)
        again = dataset.batch(5)
        np.testing.assert_array_equal(late.lr, again.lr)
        np.testing.assert_array_equal(late.hr, again.hr)
        self.assertFalse(np.array_equal(late.lr, dataset.batch(6).lr))

    def test_workers(self) -> None:
        """Prefetching threads do not change the sequence."""
        dataset = self.make(patch_size=8, batch_size=3)
        serial = list(dataset.batches(2, 9, workers=1))
        threaded = list(dataset.batches(2, 9, workers=3))
        self.assertEqual([b.step for b in threaded], list(range(2, 9)))
        for a, b in zip(serial, threaded):
            np.testing.assert_array_equal(a.lr, b.lr)
            np.testing.assert_array_equal(a.hr, b.hr)

    def test_alignment_under_augmentation(self) -> None:
        """Augmented pairs stay aligned: shrinking HR tracks LR."""
        y, x = np.mgrid[0:64, 0:64].astype(np.float64)
        plane = 0.5 + 0.3 * np.sin(x / 9.0) * np.cos(y / 5.0 + x / 13.0)
        image = Image(np.stack([plane] * 3)[np.newaxis].astype(np.float32))
        dataset = PatchDataset(
            [degrade(image, 2)], patch_size=12, batch_size=8, seed=1
        )
        batch = dataset.batch(0)
        coarse = batch.hr.reshape(8, 3, 12, 2, 12, 2).mean(axis=(3, 5))
        self.assertLess(float(np.abs(coarse - batch.lr).mean()), 0.03)

    def test_errors(self) -> None:
        """Empty datasets and undersized images are rejected."""
        with self.assertRaises(ValueError):
            PatchDataset([])
        with self.assertRaises(ValueError):
            self.make(patch_size=48)


class TestFromDir(unittest.TestCase):
    """Test cases for loading a directory of PNGs."""

    def setUp(self) -> None:
        """Write four PNGs, one in a sub-folder."""
        self.tmp_dir = tempfile.mkdtemp()
        rng = np.random.default_rng(1)
        for name in ["a.png", "b.png", "c.png", osp.join("sub", "d.png")]:
            save_png(random_image(rng, 24, 30), osp.join(self.tmp_dir, name))

    def tearDown(self) -> None:
        """Remove the PNGs."""
        shutil.rmtree(self.tmp_dir)

    def test_from_dir(self) -> None:
        """Every PNG is loaded and modcropped."""
        dataset = PatchDataset.from_dir(
            self.tmp_dir, 3, patch_size=4, batch_size=2
        )
        self.assertEqual(len(dataset), 4)
        self.assertEqual(dataset.sources[0].lr.pixels.shape, (1, 3, 8, 10))
        self.assertEqual(dataset.batch(0).hr.shape, (2, 3, 12, 12))

    def test_manifest(self) -> None:
        """A manifest restricts the images."""
        manifest = osp.join(self.tmp_dir, "train.txt")
        with open(manifest, "w") as fp:
            fp.write("# subset\nb.png\n\nsub/d.png\n")
        dataset = PatchDataset.from_dir(
            self.tmp_dir, 2, manifest=manifest, patch_size=4
        )
        self.assertEqual([s.hr.name for s in dataset.sources], ["b", "d"])


if __name__ == "__main__":
    unittest.main()
