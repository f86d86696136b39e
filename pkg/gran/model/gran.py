"""Ghost residual attention network for single-image super-resolution.

Layout, with parameter paths in brackets:

    F0 = head(I_LR)                                  [head]
    for each group g:
        F = F + tail_g(GRAB chain(F))                [body.<g>.blocks.<b>,
                                                      body.<g>.tail]
    F = F0 + body_tail(F)                            [body_tail]
    F = pixel_shuffle(conv(F)) per stage             [upsample.<i>]
    I_SR = tail(F)                                   [tail]
    I_SR = I_SR + bicubic(I_LR)     with net.global_skip, no parameters
"""

from collections import OrderedDict
from typing import Dict, Tuple

import numpy as np

from ..common.logger import logger
from ..common.typing import NetConfig
from ..core.functional import add, pixel_shuffle, resize_separable
from ..core.tensor import DEFAULT_DTYPE, ShapeError, Tensor
from ..imaging.resize import resize_weights
from ..nn.blocks import GRAB, Conv2d
from ..nn.module import Module, ModuleList, initialize


class ResidualGroup(Module):
    """Chain of blocks with a trailing conv and a short skip."""

    def __init__(self, cfg: NetConfig, dtype: np.dtype = DEFAULT_DTYPE):
        """`cfg.n_blocks` blocks of width `cfg.channels`."""
        super().__init__(dtype)
        grab = cfg.grab_config()
        self.blocks = self.add_module(
            "blocks",
            ModuleList(
                [GRAB(grab, dtype) for _ in range(cfg.n_blocks)], dtype
            ),
        )
        self.tail = self.add_module(
            "tail",
            Conv2d(cfg.channels, cfg.channels, cfg.kernel_size, dtype=dtype),
        )

    def forward(self, x: Tensor) -> Tensor:
        """x + tail(blocks(x))."""
        return add(x, self.tail(self.blocks(x)))


class GRAN(Module):
    """Shallow extractor, residual groups, long skip and upscaler."""

    def __init__(self, cfg: NetConfig, dtype: np.dtype = DEFAULT_DTYPE):
        """Register every layer with zero weights; see `build`."""
        super().__init__(dtype)
        self.cfg = cfg
        channels, kernel = cfg.channels, cfg.kernel_size
        self.head = self.add_module(
            "head", Conv2d(cfg.colors, channels, kernel, dtype=dtype)
        )
        self.body = self.add_module(
            "body",
            ModuleList(
                [ResidualGroup(cfg, dtype) for _ in range(cfg.n_groups)],
                dtype,
            ),
        )
        self.body_tail = self.add_module(
            "body_tail", Conv2d(channels, channels, kernel, dtype=dtype)
        )
        self.factors = cfg.upscale_factors()
        self.upsample = self.add_module(
            "upsample",
            ModuleList(
                [
                    Conv2d(
                        channels,
                        factor * factor * channels,
                        kernel,
                        dtype=dtype,
                    )
                    for factor in self.factors
                ],
                dtype,
            ),
        )
        self.tail = self.add_module(
            "tail", Conv2d(channels, cfg.colors, kernel, dtype=dtype)
        )
        self._bicubic: Dict[Tuple[int, int], Tuple[Tensor, Tensor]] = {}

    def forward(self, x: Tensor) -> Tensor:
        """(N, colors, H, W) -> (N, colors, sH, sW)."""
        if x.ndim != 4 or x.shape[1] != self.cfg.colors:
            raise ShapeError(
                "GRAN expects (N, {}, H, W), got {}".format(
                    self.cfg.colors, x.shape
                )
            )
        if x.shape[2] < 1 or x.shape[3] < 1:
            raise ShapeError("empty input of shape {}".format(x.shape))
        if x.dtype != self.dtype:
            x = x.astype(self.dtype)
        shallow = self.head(x)
        deep = add(shallow, self.body_tail(self.body(shallow)))
        for conv, factor in zip(self.upsample, self.factors):
            deep = pixel_shuffle(conv(deep), factor)
        out = self.tail(deep)
        if self.cfg.global_skip:
            rows, cols = self.bicubic_weights(x.shape[2], x.shape[3])
            out = add(out, resize_separable(x, rows, cols))
        return out

    def bicubic_weights(
        self, height: int, width: int
    ) -> Tuple[Tensor, Tensor]:
        """Row and column bicubic upscaling matrices for one input size."""
        key = (height, width)
        if key not in self._bicubic:
            s = self.cfg.scale
            rows = resize_weights(height, s * height, s)
            cols = resize_weights(width, s * width, s)
            self._bicubic[key] = (
                Tensor(rows, dtype=self.dtype),
                Tensor(cols, dtype=self.dtype),
            )
        return self._bicubic[key]

    @property
    def scale(self) -> int:
        """Upscaling factor."""
        return self.cfg.scale


def build(
    cfg: NetConfig, seed: int = 0, dtype: np.dtype = DEFAULT_DTYPE
) -> GRAN:
    """Construct a network with weights drawn deterministically from seed."""
    model = GRAN(cfg, dtype)
    initialize(model, seed)
    logger.info(
        "Built %s/%s model x%d with %d parameters",
        cfg.conv,
        cfg.attention,
        cfg.scale,
        model.num_parameters(),
    )
    return model


def layer_census(model: Module) -> Dict[str, int]:
    """Parameter count per convolution layer, in registration order."""
    census: Dict[str, int] = OrderedDict()
    for name, param in model.named_parameters():
        layer = name.rsplit(".", 1)[0]
        census[layer] = census.get(layer, 0) + param.tensor.size
    return census
