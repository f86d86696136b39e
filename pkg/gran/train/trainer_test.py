"""Test cases for trainer.py."""
import os
import os.path as osp
import re
import shutil
import tempfile
import unittest
from typing import List

import numpy as np

from ..common.typing import NetConfig, TrainConfig
from ..common.utils import load_gran_config
from ..core.tensor import NonFiniteError, Tensor
from ..data.dataset import PatchDataset
from ..eval.metrics import psnr_y
from ..imaging.io import Image, from_nchw
from ..imaging.patches import PatchSource, degrade
from ..imaging.resize import bicubic_resize
from ..model.checkpoint import read_checkpoint
from ..model.gran import build
from .trainer import LATEST, LOSS_LOG, compute_gradients, resume, train_loop

TINY = NetConfig(n_groups=1, n_blocks=1, channels=8, reduction=4)
SLOW_ENV = "GRAN_SLOW"


def smooth_sources(count: int, scale: int = 2) -> List[PatchSource]:
    """Smooth color images of different phases."""
    y, x = np.mgrid[0:32, 0:32].astype(np.float64)
    sources = []
    for index in range(count):
        planes = [
            0.5 + 0.3 * np.sin(x / (5.0 + index) + c) * np.cos(y / 7.0)
            for c in range(3)
        ]
        pixels = np.stack(planes)[np.newaxis].astype(np.float32)
        sources.append(degrade(Image(pixels, str(index)), scale))
    return sources


def edge_sources(count: int, size: int = 96) -> List[PatchSource]:
    """Overlapping flat color rectangles with sharp edges."""
    rng = np.random.default_rng(11)
    sources = []
    for index in range(count):
        pixels = np.empty((1, 3, size, size), dtype=np.float32)
        pixels[:] = rng.uniform(0.2, 0.8, (1, 3, 1, 1))
        for _ in range(12):
            top, left = rng.integers(0, size - 8, 2)
            height, width = rng.integers(6, size // 2, 2)
            color = rng.uniform(0.0, 1.0, (3, 1, 1))
            pixels[0, :, top : top + height, left : left + width] = color
        sources.append(degrade(Image(pixels, str(index)), 2))
    return sources


def train_config(**kwargs: float) -> TrainConfig:
    """Small batches for quick runs."""
    values = dict(
        batch_size=4,
        patch_size=8,
        lr=1e-3,
        steps=6,
        log_every=2,
        checkpoint_every=3,
        strict=True,
    )
    values.update(kwargs)
    return TrainConfig(**values)


class TestTrainLoop(unittest.TestCase):
    """Test cases for the training loop."""

    def setUp(self) -> None:
        """Scratch directory and a small dataset."""
        self.tmp_dir = tempfile.mkdtemp()
        self.dataset = PatchDataset(
            smooth_sources(4), patch_size=8, batch_size=4, seed=0
        )

    def tearDown(self) -> None:
        """Remove the scratch directory."""
        shutil.rmtree(self.tmp_dir)

    def run_dir(self, name: str) -> str:
        """Output folder for one run."""
        return osp.join(self.tmp_dir, name)

    def test_zero_steps(self) -> None:
        """No steps leave the weights untouched."""
        model = build(TINY, seed=1)
        before = model.state_dict()
        result = train_loop(model, self.dataset, train_config(steps=0))
        self.assertEqual(result.step, 0)
        self.assertEqual(result.losses, [])
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(value, before[name])

    def test_loss_decreases(self) -> None:
        """A short run lowers the L1 loss."""
        model = build(TINY, seed=0)
        cfg = train_config(steps=30, lr=1e-2, log_every=10)
        result = train_loop(model, self.dataset, cfg)
        self.assertEqual(len(result.losses), 30)
        self.assertLess(np.mean(result.losses[-5:]), result.losses[0])
        self.assertLess(result.smoothed[-1], result.smoothed[0])

    def test_outputs(self) -> None:
        """Loss log lines and checkpoint files."""
        out_dir = self.run_dir("run")
        train_loop(build(TINY), self.dataset, train_config(), out_dir)
        with open(osp.join(out_dir, LOSS_LOG)) as fp:
            lines = fp.read().splitlines()
        self.assertEqual(len(lines), 3)
        pattern = re.compile(r"^step=\d+ lr=\S+ loss=\d+\.\d+$")
        for line in lines:
            self.assertRegex(line, pattern)
        self.assertTrue(lines[0].startswith("step=2 lr=0.001 "))
        for name in ["checkpoint_3.gran", "checkpoint_6.gran", LATEST]:
            self.assertTrue(osp.isfile(osp.join(out_dir, name)))
        ckpt = read_checkpoint(osp.join(out_dir, LATEST))
        self.assertEqual((ckpt.step, ckpt.adam_step), (6, 6))
        self.assertEqual(ckpt.config.train.steps, 6)

    def test_strict_reproducible(self) -> None:
        """Two strict runs write identical checkpoints."""
        for name in ("a", "b"):
            train_loop(
                build(TINY, seed=2),
                self.dataset,
                train_config(),
                self.run_dir(name),
            )
        self.assertEqual(self.read("a", LATEST), self.read("b", LATEST))

    def test_workers(self) -> None:
        """Prefetching threads give the same weights as a serial run."""
        serial = build(TINY, seed=2)
        threaded = build(TINY, seed=2)
        train_loop(serial, self.dataset, train_config())
        train_loop(
            threaded,
            self.dataset,
            train_config(strict=False, workers=3),
        )
        for name, value in serial.state_dict().items():
            np.testing.assert_array_equal(value, threaded.state_dict()[name])

    def test_resume(self) -> None:
        """Stopping at step 3 and resuming matches a straight run."""
        train_loop(
            build(TINY, seed=4),
            self.dataset,
            train_config(),
            self.run_dir("full"),
        )
        train_loop(
            build(TINY, seed=4),
            self.dataset,
            train_config(steps=3),
            self.run_dir("part"),
        )
        model, ckpt, state = resume(osp.join(self.run_dir("part"), LATEST))
        self.assertEqual((ckpt.step, state.step), (3, 3))
        train_loop(
            model,
            self.dataset,
            train_config(),
            self.run_dir("part"),
            start_step=ckpt.step,
            state=state,
        )
        self.assertEqual(
            self.read("full", LATEST), self.read("part", LATEST)
        )
        self.assertEqual(
            self.read("full", "checkpoint_6.gran"),
            self.read("part", "checkpoint_6.gran"),
        )

    def test_non_finite(self) -> None:
        """Overflow stops training and keeps the last good weights."""
        model = build(TINY)
        model.load_state_dict(
            {
                name: np.full(value.shape, 1e30, dtype=np.float32)
                for name, value in model.state_dict().items()
            }
        )
        out_dir = self.run_dir("broken")
        with self.assertRaises(NonFiniteError):
            train_loop(model, self.dataset, train_config(), out_dir)
        ckpt = read_checkpoint(osp.join(out_dir, LATEST))
        self.assertEqual(ckpt.step, 0)
        np.testing.assert_array_equal(
            ckpt.tensors["tail.bias"], np.float32(1e30)
        )

    def test_overflowing_update(self) -> None:
        """An update that overflows float32 keeps every weight intact."""
        model = build(TINY, seed=3)
        before = model.state_dict()
        out_dir = self.run_dir("overflow")
        with np.errstate(over="ignore", invalid="ignore"):
            with self.assertRaises(NonFiniteError):
                train_loop(
                    model, self.dataset, train_config(lr=1e39), out_dir
                )
        ckpt = read_checkpoint(osp.join(out_dir, LATEST))
        self.assertEqual(ckpt.step, 0)
        for name, value in before.items():
            np.testing.assert_array_equal(model.state_dict()[name], value)
            np.testing.assert_array_equal(
                ckpt.tensors[name].reshape(value.shape), value
            )

    def test_scale_mismatch(self) -> None:
        """The dataset must match the model scale."""
        model = build(TINY.copy(update=dict(scale=3)))
        with self.assertRaises(ValueError):
            train_loop(model, self.dataset, train_config())

    def read(self, run: str, name: str) -> bytes:
        """Raw bytes of an output file."""
        with open(osp.join(self.run_dir(run), name), "rb") as fp:
            return fp.read()


@unittest.skipUnless(os.environ.get(SLOW_ENV) == "1", "set GRAN_SLOW=1")
class TestTinyPreset(unittest.TestCase):
    """The tiny preset learns past bicubic within its default run."""

    def test_beats_bicubic(self) -> None:
        """500 steps halve the loss and gain 0.2 dB over bicubic."""
        cfg = load_gran_config("tiny")
        sources = edge_sources(16)
        dataset = PatchDataset(
            sources,
            patch_size=cfg.train.patch_size,
            batch_size=cfg.train.batch_size,
            seed=cfg.train.seed,
        )
        model = build(cfg.net, seed=0)
        result = train_loop(model, dataset, cfg.train)
        self.assertEqual(result.step, 500)
        self.assertLessEqual(result.smoothed[-1], 0.5 * result.smoothed[0])
        model_psnr, bicubic_psnr = [], []
        for source in sources:
            out = model(Tensor(source.lr.pixels, dtype=model.dtype))
            sr = from_nchw(out.data, source.hr.name)
            size = (source.hr.height, source.hr.width)
            up = bicubic_resize(source.lr, size=size)
            model_psnr.append(psnr_y(sr, source.hr, 2))
            bicubic_psnr.append(psnr_y(up, source.hr, 2))
        self.assertGreaterEqual(
            np.mean(model_psnr), np.mean(bicubic_psnr) + 0.2
        )


class TestGradientFlow(unittest.TestCase):
    """Every parameter, attention included, receives gradient."""

    def test_no_dead_parameters(self) -> None:
        """Nonzero gradient for every parameter within ten batches."""
        cfg = NetConfig(
            n_groups=1, n_blocks=2, channels=16, reduction=1, dual_pool=True
        )
        model = build(cfg, seed=0)
        dataset = PatchDataset(
            smooth_sources(4), patch_size=8, batch_size=4, seed=1
        )
        seen = {name: False for name in model.state_dict()}
        for step in range(10):
            _, grads = compute_gradients(model, dataset.batch(step))
            for name, grad in grads.items():
                seen[name] = seen[name] or bool(np.any(grad != 0))
        self.assertEqual([name for name, hit in seen.items() if not hit], [])


if __name__ == "__main__":
    unittest.main()
