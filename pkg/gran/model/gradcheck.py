"""Finite-difference suite over every primitive and a whole model."""

from typing import Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from tabulate import tabulate

from ..common.logger import logger
from ..common.typing import NetConfig
from ..core.functional import (
    ConvParams,
    add,
    channel_mean_max,
    concat_channels,
    conv2d,
    global_avg_pool,
    global_max_pool,
    l1_loss,
    mean,
    mul,
    pad2d,
    pixel_shuffle,
    pixel_unshuffle,
    relu,
    resize_separable,
    sigmoid,
    slice_channels,
)
from ..core.gradcheck import check_gradients
from ..core.tensor import Tensor
from ..imaging.resize import resize_weights
from ..nn.gradcheck import check_module
from .gran import build

TOLERANCE = 1e-4
# Central-difference step; at 1e-6 roundoff swamps attention gradients.
FD_STEP = 1e-5

SIZES: Dict[str, NetConfig] = {
    "tiny": NetConfig(n_groups=1, n_blocks=1, channels=8, reduction=4),
    "small": NetConfig(n_groups=2, n_blocks=2, channels=16, reduction=4),
}

ShapeSpec = Tuple[Tuple[int, ...], ...]
ForwardFn = Callable[[Sequence[Tensor]], Tensor]


class CheckRow(NamedTuple):
    """Outcome of one gradient check."""

    name: str
    seed: int
    error: float

    @property
    def passed(self) -> bool:
        """Whether the error is below the tolerance."""
        return self.error < TOLERANCE


def _weighted(out: Tensor, rng: np.random.Generator) -> Tensor:
    weights = rng.standard_normal(out.shape)
    return mean(mul(out, Tensor(weights * weights.size)))


def _primitives() -> List[Tuple[str, ShapeSpec, ForwardFn]]:
    return [
        (
            "conv2d",
            ((2, 3, 6, 5), (4, 3, 3, 3), (4,)),
            lambda t: conv2d(t[0], ConvParams(t[1], t[2], padding=1)),
        ),
        (
            "conv2d_strided_grouped",
            ((1, 4, 7, 7), (6, 2, 3, 3), (6,)),
            lambda t: conv2d(
                t[0], ConvParams(t[1], t[2], stride=2, groups=2)
            ),
        ),
        (
            "depthwise_conv2d",
            ((1, 3, 6, 6), (3, 1, 5, 5), (3,)),
            lambda t: conv2d(t[0], ConvParams(t[1], t[2], 1, 2, 3)),
        ),
        ("relu", ((2, 3, 4, 4),), lambda t: relu(t[0])),
        ("sigmoid", ((2, 3, 4, 4),), lambda t: sigmoid(t[0])),
        (
            "add",
            ((1, 2, 3, 3), (1, 2, 3, 3)),
            lambda t: add(t[0], t[1]),
        ),
        (
            "mul_channel",
            ((2, 3, 4, 4), (2, 3, 1, 1)),
            lambda t: mul(t[0], t[1]),
        ),
        (
            "mul_spatial",
            ((2, 3, 4, 4), (2, 1, 4, 4)),
            lambda t: mul(t[0], t[1]),
        ),
        (
            "concat_slice",
            ((1, 2, 3, 3), (1, 3, 3, 3)),
            lambda t: slice_channels(concat_channels(t[0], t[1]), 1, 4),
        ),
        ("pad2d", ((1, 2, 3, 3),), lambda t: pad2d(t[0], 2)),
        ("global_avg_pool", ((2, 3, 4, 5),), lambda t: global_avg_pool(t[0])),
        ("global_max_pool", ((2, 3, 4, 5),), lambda t: global_max_pool(t[0])),
        (
            "channel_mean_max",
            ((2, 5, 3, 4),),
            lambda t: channel_mean_max(t[0]),
        ),
        ("pixel_shuffle", ((1, 8, 3, 3),), lambda t: pixel_shuffle(t[0], 2)),
        (
            "pixel_unshuffle",
            ((1, 2, 6, 6),),
            lambda t: pixel_unshuffle(t[0], 3),
        ),
        (
            "resize_separable",
            ((1, 2, 3, 4),),
            lambda t: resize_separable(
                t[0],
                Tensor(resize_weights(3, 6, 2)),
                Tensor(resize_weights(4, 3, 0.75)),
            ),
        ),
        (
            "l1_loss",
            ((1, 3, 4, 4), (1, 3, 4, 4)),
            lambda t: l1_loss(t[0], t[1]),
        ),
    ]


def check_primitives(seed: int) -> List[CheckRow]:
    """Check every primitive at a random point drawn from `seed`."""
    rng = np.random.default_rng(seed)
    rows = []
    for name, shapes, func in _primitives():
        arrays = [rng.standard_normal(shape) for shape in shapes]
        weight_seed = int(rng.integers(1 << 31))

        def loss_fn(
            tensors: Sequence[Tensor],
            func: ForwardFn = func,
            weight_seed: int = weight_seed,
        ) -> Tensor:
            out = func(tensors)
            if out.ndim == 0:
                return out
            return _weighted(out, np.random.default_rng(weight_seed))

        result = check_gradients(
            loss_fn, arrays, eps=FD_STEP, seed=seed
        )
        rows.append(CheckRow(name, seed, result.max_error))
    return rows


def check_model(size: str, seed: int, samples: int = 4) -> CheckRow:
    """End-to-end check of a freshly built float64 model."""
    cfg = SIZES[size]
    model = build(cfg, seed, np.float64)
    x = np.random.default_rng(seed).uniform(0.0, 1.0, (1, cfg.colors, 8, 8))
    result = check_module(
        model, x, eps=FD_STEP, samples=samples, seed=seed
    )
    return CheckRow("model.{}".format(size), seed, result.max_error)


def run_gradcheck(
    size: str = "tiny", seeds: Sequence[int] = tuple(range(10))
) -> List[CheckRow]:
    """Primitive and model checks for every seed."""
    if size not in SIZES:
        raise ValueError(
            "unknown gradcheck size {}, expected one of {}".format(
                size, sorted(SIZES)
            )
        )
    rows: List[CheckRow] = []
    for seed in seeds:
        rows.extend(check_primitives(seed))
        rows.append(check_model(size, seed))
    failed = [row for row in rows if not row.passed]
    logger.info(
        "Gradient check: %d checks, %d failed, max error %.3e",
        len(rows),
        len(failed),
        max(row.error for row in rows),
    )
    return rows


def render_rows(rows: Sequence[CheckRow]) -> str:
    """Worst error per check name as a table."""
    worst: Dict[str, CheckRow] = {}
    for row in rows:
        if row.name not in worst or row.error > worst[row.name].error:
            worst[row.name] = row
    table = [
        [row.name, row.seed, "{:.3e}".format(row.error), row.passed]
        for row in worst.values()
    ]
    return tabulate(
        table, headers=["check", "worst seed", "max rel. error", "ok"]
    )
