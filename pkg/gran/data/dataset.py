"""Random LR/HR patch batches for training.

A batch depends only on (seed, step): its generator is seeded from
`SeedSequence([seed, step])`. Prefetching on worker threads therefore
delivers the same sequence for any number of workers.
"""

from typing import Iterator, List, NamedTuple, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from ..common.logger import logger
from ..imaging.augment import NUM_VARIANTS, augment_array
from ..imaging.io import load_png
from ..imaging.patches import PatchSource, degrade, random_pair
from .gen_lists import image_paths


class Batch(NamedTuple):
    """Stacked (B, 3, p, p) LR and (B, 3, sp, sp) HR patches."""

    step: int
    lr: np.ndarray
    hr: np.ndarray


class PatchDataset:
    """HR images with their bicubic LR versions, sampled into batches."""

    def __init__(
        self,
        sources: Sequence[PatchSource],
        patch_size: int = 48,
        batch_size: int = 12,
        seed: int = 0,
        augment: bool = True,
    ) -> None:
        """Check that every LR image can hold a patch."""
        if not sources:
            raise ValueError("dataset is empty")
        for source in sources:
            if min(source.lr.height, source.lr.width) < patch_size:
                raise ValueError(
                    "{}: LR image {}x{} cannot hold a {}px patch".format(
                        source.hr.name,
                        source.lr.height,
                        source.lr.width,
                        patch_size,
                    )
                )
        self.sources = list(sources)
        self.patch_size = patch_size
        self.batch_size = batch_size
        self.seed = seed
        self.augment = augment

    @classmethod
    def from_dir(
        cls,
        data_dir: str,
        scale: int,
        manifest: Optional[str] = None,
        **kwargs: int,
    ) -> "PatchDataset":
        """Load and degrade every HR PNG of `data_dir`."""
        sources = [
            degrade(load_png(path), scale)
            for path in tqdm(image_paths(data_dir, manifest))
        ]
        logger.info("Loaded %d training images at x%d", len(sources), scale)
        return cls(sources, **kwargs)

    def __len__(self) -> int:
        """Number of images."""
        return len(self.sources)

    @property
    def scale(self) -> int:
        """Upscaling factor of the pairs."""
        return self.sources[0].scale

    def batch(self, step: int) -> Batch:
        """Batch number `step`, with replacement over images and positions."""
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, step]))
        lrs: List[np.ndarray] = []
        hrs: List[np.ndarray] = []
        for _ in range(self.batch_size):
            source = self.sources[int(rng.integers(len(self.sources)))]
            pair = random_pair(source, self.patch_size, rng)
            variant = int(rng.integers(NUM_VARIANTS)) if self.augment else 0
            lrs.append(augment_array(pair.lr, variant))
            hrs.append(augment_array(pair.hr, variant))
        return Batch(step, np.concatenate(lrs), np.concatenate(hrs))

    def batches(
        self, start: int, stop: int, workers: int = 1
    ) -> Iterator[Batch]:
        """Batches start, ..., stop - 1 in order, prefetched in chunks."""
        if workers <= 1:
            for step in range(start, stop):
                yield self.batch(step)
            return
        with Parallel(n_jobs=workers, backend="threading") as parallel:
            for chunk in range(start, stop, workers):
                yield from parallel(
                    delayed(self.batch)(step)
                    for step in range(chunk, min(chunk + workers, stop))
                )
