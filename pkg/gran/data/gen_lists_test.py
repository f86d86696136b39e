"""Test cases for gen_lists.py."""
import os
import os.path as osp
import shutil
import tempfile
import unittest

from .gen_lists import gen_manifest, image_paths


class TestManifest(unittest.TestCase):
    """Test cases for manifest generation."""

    def setUp(self) -> None:
        """Empty files standing in for images."""
        self.tmp_dir = tempfile.mkdtemp()
        os.makedirs(osp.join(self.tmp_dir, "hr", "nested"))
        for name in ["b.png", "a.png", "notes.txt", "nested/c.png"]:
            with open(osp.join(self.tmp_dir, "hr", name), "w"):
                pass

    def tearDown(self) -> None:
        """Remove the scratch files."""
        shutil.rmtree(self.tmp_dir)

    def test_gen_manifest(self) -> None:
        """Sorted relative PNG paths, written one per line."""
        out_path = osp.join(self.tmp_dir, "lists", "train.txt")
        names = gen_manifest(osp.join(self.tmp_dir, "hr"), out_path)
        self.assertEqual(names, ["a.png", "b.png", "nested/c.png"])
        with open(out_path) as fp:
            self.assertEqual(fp.read(), "a.png\nb.png\nnested/c.png\n")

    def test_image_paths(self) -> None:
        """Paths are joined to the data directory."""
        hr_dir = osp.join(self.tmp_dir, "hr")
        manifest = osp.join(self.tmp_dir, "list.txt")
        with open(manifest, "w") as fp:
            fp.write("b.png\n")
        self.assertEqual(
            image_paths(hr_dir, manifest), [osp.join(hr_dir, "b.png")]
        )
        self.assertEqual(len(image_paths(hr_dir)), 3)

    def test_errors(self) -> None:
        """Missing and empty folders are errors."""
        with self.assertRaises(ValueError):
            gen_manifest(osp.join(self.tmp_dir, "missing"))
        empty = osp.join(self.tmp_dir, "empty")
        os.makedirs(empty)
        with self.assertRaises(ValueError):
            image_paths(empty)


if __name__ == "__main__":
    unittest.main()
