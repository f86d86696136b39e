"""Test cases for checkpoint.py."""
import os
import struct
import tempfile
import unittest

import numpy as np

from ..common.typing import GranConfig, NetConfig, TrainConfig
from ..common.utils import load_gran_config
from ..core.tensor import Tensor
from .checkpoint import (
    Checkpoint,
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    decode,
    encode,
    load,
    model_checkpoint,
    read_checkpoint,
    save,
    write_checkpoint,
)
from .gran import build

MINIMAL = NetConfig(n_groups=1, n_blocks=1, channels=8)


class TestCheckpoint(unittest.TestCase):
    """Test cases for writing and reading checkpoints."""

    def setUp(self) -> None:
        """Temporary output folder."""
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "model.gran")

    def tearDown(self) -> None:
        """Remove the output folder."""
        self.tmp.cleanup()

    def test_round_trip(self) -> None:
        """Weights, config and outputs survive save and load."""
        model = build(MINIMAL.copy(update=dict(scale=3)), seed=7)
        train = TrainConfig(steps=5, lr=2e-4)
        save(model, self.path, train)
        loaded, ckpt = load(self.path)
        self.assertEqual(loaded.cfg, model.cfg)
        self.assertEqual(ckpt.config.train, train)
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(loaded.state_dict()[name], value)
        x = Tensor(np.random.default_rng(0).uniform(0, 1, (1, 3, 8, 8)))
        x = x.astype(np.float32)
        np.testing.assert_array_equal(loaded(x).data, model(x).data)

    def test_byte_identical(self) -> None:
        """save -> load -> save reproduces the file exactly."""
        model = build(MINIMAL, seed=1)
        save(model, self.path)
        with open(self.path, "rb") as fp:
            first = fp.read()
        loaded, _ = load(self.path)
        second_path = os.path.join(self.tmp.name, "again.gran")
        save(loaded, second_path)
        with open(second_path, "rb") as fp:
            self.assertEqual(fp.read(), first)

    def test_header(self) -> None:
        """The file starts with magic, version and the config blob."""
        save(build(MINIMAL), self.path)
        with open(self.path, "rb") as fp:
            data = fp.read()
        self.assertEqual(data[:4], b"GRAN")
        version, length = struct.unpack("<II", data[4:12])
        self.assertEqual(version, 1)
        blob = data[12 : 12 + length].decode("utf-8")
        self.assertIn("[net]", blob)
        self.assertIn("n_groups = 1", blob)

    def test_training_state(self) -> None:
        """Step counters and optimizer moments are kept."""
        model = build(MINIMAL)
        moments = {
            "adam.m." + name: np.full(value.shape, 0.5, dtype=np.float32)
            for name, value in model.state_dict().items()
        }
        ckpt = model_checkpoint(model, TrainConfig(), 12, 12, moments)
        write_checkpoint(self.path, ckpt)
        restored = read_checkpoint(self.path)
        self.assertEqual((restored.step, restored.adam_step), (12, 12))
        self.assertEqual(set(restored.weights()), set(model.state_dict()))
        first = restored.moments("adam.m.")
        self.assertEqual(set(first), set(model.state_dict()))
        bias = first["head.bias"]
        self.assertEqual(bias.shape, (8, 1, 1, 1))
        np.testing.assert_array_equal(bias, 0.5)
        self.assertEqual(encode(restored), encode(ckpt))

    def test_bad_magic(self) -> None:
        """A foreign file is a format error."""
        data = encode(model_checkpoint(build(MINIMAL)))
        with self.assertRaises(CheckpointFormatError):
            decode(b"PNG!" + data[4:])
        bumped = data[:4] + struct.pack("<I", 99) + data[8:]
        with self.assertRaises(CheckpointFormatError):
            decode(bumped)
        with self.assertRaises(CheckpointFormatError):
            decode(data + b"\0")

    def test_truncated(self) -> None:
        """Cutting the file anywhere is detected."""
        data = encode(model_checkpoint(build(MINIMAL)))
        for cut in (2, 10, 40, len(data) // 2, len(data) - 1):
            with self.assertRaises(CheckpointTruncatedError):
                decode(data[:cut])

    def test_corrupt_dims(self) -> None:
        """Huge dimensions read as truncation, not a reshape failure."""
        data = encode(model_checkpoint(build(MINIMAL)))
        (length,) = struct.unpack("<I", data[8:12])
        pos = 12 + length + 4
        (name_length,) = struct.unpack("<I", data[pos : pos + 4])
        pos += 4 + name_length
        for dim in (65536, 2**32 - 1):
            patched = data[:pos] + struct.pack("<4I", *[dim] * 4)
            patched += data[pos + 16 :]
            with self.assertRaises(CheckpointTruncatedError):
                decode(patched)

    def test_shape_mismatch(self) -> None:
        """Loading weights of another width is a shape error."""
        wide = build(MINIMAL.copy(update=dict(channels=12)))
        ckpt = model_checkpoint(wide)
        narrow = Checkpoint(
            GranConfig(net=MINIMAL), ckpt.tensors, ckpt.step, ckpt.adam_step
        )
        write_checkpoint(self.path, narrow)
        with self.assertRaises(CheckpointShapeError):
            load(self.path)

    def test_tiny_size(self) -> None:
        """A tiny-preset checkpoint stays under 1 MB."""
        cfg = load_gran_config("tiny")
        model = build(cfg.net)
        save(model, self.path, cfg.train)
        size = os.path.getsize(self.path)
        self.assertLess(size, 1 << 20)
        self.assertGreater(size, 4 * model.num_parameters())


if __name__ == "__main__":
    unittest.main()
