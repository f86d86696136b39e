"""Test cases for gran.py."""
import unittest

import numpy as np

from ..common.typing import NetConfig
from ..core.functional import pixel_shuffle
from ..core.tensor import ShapeError, Tensor
from ..imaging.resize import resize_array
from .gran import build, layer_census

MINIMAL = NetConfig(n_groups=1, n_blocks=1, channels=8)


class TestBuild(unittest.TestCase):
    """Test cases for model construction."""

    def test_deterministic(self) -> None:
        """Equal seeds give bit-identical weights, other seeds differ."""
        first = build(MINIMAL, seed=3).state_dict()
        second = build(MINIMAL, seed=3).state_dict()
        other = build(MINIMAL, seed=4).state_dict()
        self.assertEqual(list(first), list(second))
        for name, value in first.items():
            np.testing.assert_array_equal(value, second[name])
        self.assertFalse(
            np.array_equal(first["head.weight"], other["head.weight"])
        )

    def test_init(self) -> None:
        """Biases start at zero, weights within the fan-in bound."""
        model = build(MINIMAL, seed=0)
        for name, value in model.state_dict().items():
            if name.endswith("bias"):
                np.testing.assert_array_equal(value, 0.0)
            else:
                bound = 1 / np.sqrt(np.prod(value.shape[1:]))
                self.assertLessEqual(np.abs(value).max(), bound * (1 + 1e-6))

    def test_names(self) -> None:
        """Parameter paths follow the layer layout."""
        names = list(build(MINIMAL).state_dict())
        self.assertEqual(names[:2], ["head.weight", "head.bias"])
        for name in [
            "body.0.blocks.0.ghost1.primary.weight",
            "body.0.blocks.0.ghost2.cheap.1.bias",
            "body.0.blocks.0.attention.channel.down.weight",
            "body.0.blocks.0.attention.spatial.conv.weight",
            "body.0.tail.weight",
            "body_tail.bias",
            "upsample.0.weight",
        ]:
            self.assertIn(name, names)
        self.assertEqual(names[-2:], ["tail.weight", "tail.bias"])

    def test_default_census(self) -> None:
        """10 groups of 20 blocks at 64 channels, x2."""
        model = build(NetConfig())
        self.assertEqual(model.num_parameters(), 1568243)
        census = layer_census(model)
        self.assertEqual(census["head"], 3 * 64 * 9 + 64)
        self.assertEqual(census["upsample.0"], 256 * 64 * 9 + 256)
        self.assertEqual(
            census["body.3.blocks.7.ghost1.primary"], 64 * 22 + 22
        )
        self.assertEqual(sum(census.values()), model.num_parameters())


class TestForward(unittest.TestCase):
    """Test cases for the forward pass."""

    rng = np.random.default_rng(0)

    def test_scales(self) -> None:
        """Output is exactly scale times the input size."""
        x = Tensor(self.rng.uniform(0, 1, (1, 3, 8, 10)), dtype=np.float32)
        for scale, stages in [(2, 1), (3, 1), (4, 2), (8, 3)]:
            model = build(MINIMAL.copy(update=dict(scale=scale)))
            self.assertEqual(len(model.upsample), stages)
            out = model(x)
            self.assertEqual(out.shape, (1, 3, 8 * scale, 10 * scale))
            self.assertTrue(np.isfinite(out.data).all())

    def test_shape_x2(self) -> None:
        """(1, 3, 24, 24) at x2 gives (1, 3, 48, 48)."""
        model = build(MINIMAL)
        x = Tensor(self.rng.uniform(0, 1, (1, 3, 24, 24)), dtype=np.float32)
        self.assertEqual(model(x).shape, (1, 3, 48, 48))

    def test_zero_body(self) -> None:
        """With a zero body the network is head -> upscaler -> tail."""
        model = build(NetConfig(n_groups=2, n_blocks=2, channels=8), 1)
        for name, param in model.named_parameters():
            if name.startswith("body"):
                param.assign(np.zeros(param.shape, dtype=model.dtype))
        x = Tensor(self.rng.uniform(0, 1, (2, 3, 9, 9)), dtype=np.float32)
        expected = model.head(x)
        for conv, factor in zip(model.upsample, model.factors):
            expected = pixel_shuffle(conv(expected), factor)
        expected = model.tail(expected)
        np.testing.assert_array_equal(model(x).data, expected.data)

    def test_global_skip(self) -> None:
        """A zero tail leaves the bicubic upscale of the input."""
        plain = MINIMAL.copy(update=dict(scale=3))
        cfg = plain.copy(update=dict(global_skip=True))
        model = build(cfg, 2, np.float64)
        self.assertEqual(model.num_parameters(), build(plain).num_parameters())
        for name, param in model.named_parameters():
            if name.startswith("tail"):
                param.assign(np.zeros(param.shape))
        x = self.rng.uniform(0, 1, (2, 3, 7, 5))
        out = model(Tensor(x))
        self.assertEqual(out.shape, (2, 3, 21, 15))
        np.testing.assert_allclose(out.data, resize_array(x, 3), atol=1e-12)

    def test_float64(self) -> None:
        """Models can run in double precision."""
        model = build(MINIMAL, 0, np.float64)
        out = model(Tensor(np.ones((1, 3, 8, 8))))
        self.assertEqual(out.dtype, np.float64)

    def test_bad_input(self) -> None:
        """Wrong channel count or rank is a shape error."""
        model = build(MINIMAL)
        with self.assertRaises(ShapeError):
            model(Tensor(np.zeros((1, 1, 8, 8), dtype=np.float32)))
        with self.assertRaises(ShapeError):
            model(Tensor(np.zeros((3, 8, 8), dtype=np.float32)))

    def test_invalid_scale(self) -> None:
        """Scales outside {2, 3, 4, 8} are rejected by the config."""
        with self.assertRaises(ValueError):
            NetConfig(scale=5)


if __name__ == "__main__":
    unittest.main()
