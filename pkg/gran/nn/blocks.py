"""Ghost modules, attention units and the ghost residual attention block.

Layer names used in parameter paths:

- `Conv2d`: `weight`, `bias` (attention convs have no bias)
- `GhostModule`: `primary`, `cheap.<j>`
- `ChannelAttention`: `down`, `up`
- `SpatialAttention`: `conv`
- `CSAM`: `channel`, `spatial`
- `GRAB`: `ghost1`, `ghost2` (or `conv1`, `conv2`), `attention`
"""

from typing import List, Optional

import numpy as np

from ..common.typing import (
    AttentionConfig,
    AttentionType,
    GhostConfig,
    GrabConfig,
)
from ..core.functional import (
    ConvParams,
    add,
    channel_mean_max,
    concat_channels,
    conv2d,
    global_avg_pool,
    global_max_pool,
    mul,
    relu,
    sigmoid,
    slice_channels,
)
from ..core.tensor import DEFAULT_DTYPE, ShapeError, Tensor
from .module import Module, ModuleList


def _check_channels(x: Tensor, channels: int, where: str) -> None:
    if x.ndim != 4 or x.shape[1] != channels:
        raise ShapeError(
            "{} expects (N, {}, H, W), got {}".format(where, channels, x.shape)
        )


class Conv2d(Module):
    """Same-padded square convolution, stride 1."""

    def __init__(  # pylint: disable=too-many-arguments
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        groups: int = 1,
        bias: bool = True,
        dtype: np.dtype = DEFAULT_DTYPE,
    ) -> None:
        """Register `weight` and, if requested, `bias`."""
        super().__init__(dtype)
        if kernel_size % 2 == 0:
            raise ValueError(
                "kernel size must be odd, got {}".format(kernel_size)
            )
        if in_channels % groups or out_channels % groups:
            raise ValueError(
                "channels {}->{} not divisible by groups={}".format(
                    in_channels, out_channels, groups
                )
            )
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.groups = groups
        self.weight = self.add_parameter(
            "weight",
            (out_channels, in_channels // groups, kernel_size, kernel_size),
        )
        self.bias = (
            self.add_parameter("bias", (out_channels,)) if bias else None
        )

    def forward(self, x: Tensor) -> Tensor:
        """Convolve with zero padding k // 2."""
        params = ConvParams(
            self.weight.tensor,
            None if self.bias is None else self.bias.tensor,
            padding=self.kernel_size // 2,
            groups=self.groups,
        )
        return conv2d(x, params)


class GhostModule(Module):
    """Primary convolution to m intrinsic maps plus cheap depthwise maps.

    The output is [Y', psi_1(Y'), ..., psi_{q-1}(Y')] truncated to N
    channels, where Y' is the primary output.
    """

    def __init__(self, cfg: GhostConfig, dtype: np.dtype = DEFAULT_DTYPE):
        """Build the primary conv and q - 1 depthwise branches."""
        super().__init__(dtype)
        self.cfg = cfg
        m = cfg.intrinsic_channels
        self.primary = self.add_module(
            "primary",
            Conv2d(cfg.in_channels, m, cfg.primary_kernel, dtype=dtype),
        )
        self.cheap = self.add_module(
            "cheap",
            ModuleList(
                [
                    Conv2d(m, m, kernel, groups=m, dtype=dtype)
                    for kernel in cfg.ghost_kernels
                ],
                dtype,
            ),
        )

    def forward(self, x: Tensor) -> Tensor:
        """(B, M, H, W) -> (B, N, H, W)."""
        _check_channels(x, self.cfg.in_channels, "GhostModule")
        intrinsic = self.primary(x)
        branches = [intrinsic] + [branch(intrinsic) for branch in self.cheap]
        out = concat_channels(*branches)
        if out.shape[1] > self.cfg.out_channels:
            out = slice_channels(out, 0, self.cfg.out_channels)
        return out


class ChannelAttention(Module):
    """Squeeze-and-excitation gate: which channels matter."""

    def __init__(
        self,
        channels: int,
        cfg: AttentionConfig,
        dtype: np.dtype = DEFAULT_DTYPE,
    ) -> None:
        """Bottleneck of width max(1, C // r), no biases."""
        super().__init__(dtype)
        self.channels = channels
        self.dual_pool = cfg.dual_pool
        reduced = cfg.reduced_channels(channels)
        self.down = self.add_module(
            "down", Conv2d(channels, reduced, 1, bias=False, dtype=dtype)
        )
        self.up = self.add_module(
            "up", Conv2d(reduced, channels, 1, bias=False, dtype=dtype)
        )

    def attention_map(self, x: Tensor) -> Tensor:
        """Per-channel gate M_c of shape (N, C, 1, 1)."""
        _check_channels(x, self.channels, "ChannelAttention")
        logits = self.up(relu(self.down(global_avg_pool(x))))
        if self.dual_pool:
            peak = self.up(relu(self.down(global_max_pool(x))))
            logits = add(logits, peak)
        return sigmoid(logits)

    def forward(self, x: Tensor) -> Tensor:
        """x scaled per channel."""
        return mul(x, self.attention_map(x))


class SpatialAttention(Module):
    """Gate over pixel positions from channel mean and max."""

    def __init__(
        self, cfg: AttentionConfig, dtype: np.dtype = DEFAULT_DTYPE
    ) -> None:
        """One 2 -> 1 convolution without bias."""
        super().__init__(dtype)
        if cfg.spatial_kernel % 2 == 0:
            raise ValueError(
                "spatial kernel must be odd, got {}".format(cfg.spatial_kernel)
            )
        self.conv = self.add_module(
            "conv", Conv2d(2, 1, cfg.spatial_kernel, bias=False, dtype=dtype)
        )

    def attention_map(self, x: Tensor) -> Tensor:
        """Per-pixel gate M_s of shape (N, 1, H, W)."""
        return sigmoid(self.conv(channel_mean_max(x)))

    def forward(self, x: Tensor) -> Tensor:
        """x scaled per pixel, identically for every channel."""
        return mul(x, self.attention_map(x))


class CSAM(Module):
    """Channel attention followed by spatial attention."""

    def __init__(
        self,
        channels: int,
        cfg: AttentionConfig,
        dtype: np.dtype = DEFAULT_DTYPE,
    ) -> None:
        """Register both gates."""
        super().__init__(dtype)
        self.channel = self.add_module(
            "channel", ChannelAttention(channels, cfg, dtype)
        )
        self.spatial = self.add_module(
            "spatial", SpatialAttention(cfg, dtype)
        )

    def forward(self, x: Tensor) -> Tensor:
        """Channel gate first, then the spatial gate on its output."""
        return self.spatial(self.channel(x))


def build_attention(
    kind: AttentionType,
    channels: int,
    cfg: AttentionConfig,
    dtype: np.dtype = DEFAULT_DTYPE,
) -> Optional[Module]:
    """Attention unit of a block, None for `none`."""
    if kind == "csam":
        return CSAM(channels, cfg, dtype)
    if kind == "channel":
        return ChannelAttention(channels, cfg, dtype)
    if kind == "spatial":
        return SpatialAttention(cfg, dtype)
    if kind == "none":
        return None
    raise ValueError("unknown attention type {}".format(kind))


class GRAB(Module):
    """Ghost residual attention block: x + attention(conv(relu(conv(x))))."""

    def __init__(self, cfg: GrabConfig, dtype: np.dtype = DEFAULT_DTYPE):
        """Two ghost modules (or standard convs) and the attention unit."""
        super().__init__(dtype)
        self.cfg = cfg
        self.body: List[Module] = []
        if cfg.conv == "ghost":
            for name in ("ghost1", "ghost2"):
                self.body.append(
                    self.add_module(name, GhostModule(cfg.ghost, dtype))
                )
        else:
            for name in ("conv1", "conv2"):
                self.body.append(
                    self.add_module(
                        name,
                        Conv2d(
                            cfg.channels,
                            cfg.channels,
                            cfg.kernel_size,
                            dtype=dtype,
                        ),
                    )
                )
        attention = build_attention(
            cfg.attention_type, cfg.channels, cfg.attention, dtype
        )
        self.attention = (
            None
            if attention is None
            else self.add_module("attention", attention)
        )

    def forward(self, x: Tensor) -> Tensor:
        """Residual update; output shape equals input shape."""
        _check_channels(x, self.cfg.channels, "GRAB")
        res = self.body[1](relu(self.body[0](x)))
        if self.attention is not None:
            res = self.attention(res)
        return add(x, res)
