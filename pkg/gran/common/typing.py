"""Common type definitions."""

import math
from typing import Dict, Literal, Tuple

from pydantic import BaseModel, Extra, validator

ConvType = Literal["ghost", "standard"]
AttentionType = Literal["csam", "channel", "spatial", "none"]
GhostMode = Literal["depthwise", "dense"]

SCALES = (2, 3, 4, 8)


class FrozenModel(BaseModel):
    """Immutable config model that rejects unknown keys."""

    class Config:
        """Pydantic settings shared by every config."""

        extra = Extra.forbid
        allow_mutation = False


class GhostConfig(FrozenModel):
    """Ghost module hyperparameters.

    A primary convolution produces `m = ceil(N / q)` intrinsic channels.
    The identity branch and one cheap depthwise branch per entry of
    `ghost_kernels` are concatenated and truncated to `N` channels.
    """

    in_channels: int
    out_channels: int
    ratio: int = 3
    primary_kernel: int = 1
    ghost_kernels: Tuple[int, ...] = (3, 5)

    @validator("in_channels", "out_channels", "primary_kernel")
    def _positive(cls, value: int) -> int:  # pylint: disable=no-self-argument
        if value < 1:
            raise ValueError("must be positive, got {}".format(value))
        return value

    @validator("ratio")
    def _ratio(cls, value: int) -> int:  # pylint: disable=no-self-argument
        if value < 2:
            raise ValueError(
                "ghost ratio q must be >= 2, got {}".format(value)
            )
        return value

    @validator("ghost_kernels")
    def _kernels(  # pylint: disable=no-self-argument
        cls, value: Tuple[int, ...], values: Dict[str, int]
    ) -> Tuple[int, ...]:
        ratio = values.get("ratio")
        if ratio is not None and len(value) != ratio - 1:
            raise ValueError(
                "expected {} ghost kernels for q={}, got {}".format(
                    ratio - 1, ratio, len(value)
                )
            )
        for kernel in value:
            if kernel < 1 or kernel % 2 == 0:
                raise ValueError(
                    "ghost kernels must be odd and positive, got {}".format(
                        kernel
                    )
                )
        return value

    @property
    def intrinsic_channels(self) -> int:
        """Number m of channels produced by the primary convolution."""
        return math.ceil(self.out_channels / self.ratio)


class AttentionConfig(FrozenModel):
    """Channel and spatial attention hyperparameters."""

    reduction: int = 16
    spatial_kernel: int = 7
    dual_pool: bool = False

    @validator("reduction")
    def _reduction(cls, value: int) -> int:  # pylint: disable=no-self-argument
        if value < 1:
            raise ValueError(
                "reduction must be positive, got {}".format(value)
            )
        return value

    @validator("spatial_kernel")
    def _odd(cls, value: int) -> int:  # pylint: disable=no-self-argument
        if value < 1 or value % 2 == 0:
            raise ValueError(
                "spatial kernel must be odd, got {}".format(value)
            )
        return value

    def reduced_channels(self, channels: int) -> int:
        """Bottleneck width of the channel attention for `channels`."""
        return max(1, channels // self.reduction)


class GrabConfig(FrozenModel):
    """One residual attention block: two convs, attention, skip."""

    channels: int
    ghost: GhostConfig
    attention: AttentionConfig
    conv: ConvType = "ghost"
    attention_type: AttentionType = "csam"
    kernel_size: int = 3


class NetConfig(FrozenModel):
    """Network architecture hyperparameters."""

    n_groups: int = 10
    n_blocks: int = 20
    channels: int = 64
    scale: int = 2
    colors: int = 3
    kernel_size: int = 3
    conv: ConvType = "ghost"
    attention: AttentionType = "csam"
    ghost_ratio: int = 3
    primary_kernel: int = 1
    ghost_kernels: Tuple[int, ...] = (3, 5)
    reduction: int = 16
    spatial_kernel: int = 7
    dual_pool: bool = False
    global_skip: bool = False

    @validator("scale")
    def _scale(cls, value: int) -> int:  # pylint: disable=no-self-argument
        if value not in SCALES:
            raise ValueError(
                "scale must be one of {}, got {}".format(SCALES, value)
            )
        return value

    @validator("n_groups", "n_blocks", "channels", "colors", "kernel_size")
    def _count(cls, value: int) -> int:  # pylint: disable=no-self-argument
        if value < 1:
            raise ValueError("must be >= 1, got {}".format(value))
        return value

    def ghost_config(self) -> GhostConfig:
        """Ghost module config for a channel-preserving block conv."""
        return GhostConfig(
            in_channels=self.channels,
            out_channels=self.channels,
            ratio=self.ghost_ratio,
            primary_kernel=self.primary_kernel,
            ghost_kernels=self.ghost_kernels,
        )

    def attention_config(self) -> AttentionConfig:
        """Attention config shared by every block."""
        return AttentionConfig(
            reduction=self.reduction,
            spatial_kernel=self.spatial_kernel,
            dual_pool=self.dual_pool,
        )

    def grab_config(self) -> GrabConfig:
        """Block config shared by every block of the body."""
        return GrabConfig(
            channels=self.channels,
            ghost=self.ghost_config(),
            attention=self.attention_config(),
            conv=self.conv,
            attention_type=self.attention,
            kernel_size=self.kernel_size,
        )

    def upscale_factors(self) -> Tuple[int, ...]:
        """Sub-pixel stages: x2 and x3 in one stage, x4/x8 as x2 stages."""
        if self.scale in (2, 3):
            return (self.scale,)
        return (2,) * int(math.log2(self.scale))


class TrainConfig(FrozenModel):
    """Training protocol hyperparameters."""

    batch_size: int = 12
    patch_size: int = 48
    lr: float = 1e-4
    lr_interval: int = 200000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    steps: int = 1000
    seed: int = 0
    loss: Literal["l1"] = "l1"
    log_every: int = 100
    checkpoint_every: int = 1000
    smoothing: float = 0.9
    workers: int = 1
    strict: bool = False

    @validator(
        "batch_size",
        "patch_size",
        "lr",
        "lr_interval",
        "eps",
        "log_every",
        "checkpoint_every",
        "workers",
    )
    def _positive(  # pylint: disable=no-self-argument
        cls, value: float
    ) -> float:
        if value <= 0:
            raise ValueError("must be positive, got {}".format(value))
        return value

    @validator("steps", "seed")
    def _non_negative(  # pylint: disable=no-self-argument
        cls, value: int
    ) -> int:
        if value < 0:
            raise ValueError("must be non-negative, got {}".format(value))
        return value

    @validator("beta1", "beta2", "smoothing")
    def _unit(cls, value: float) -> float:  # pylint: disable=no-self-argument
        if not 0 < value < 1:
            raise ValueError("must lie in (0, 1), got {}".format(value))
        return value


class GranConfig(FrozenModel):
    """Top-level config file contents."""

    net: NetConfig = NetConfig()
    train: TrainConfig = TrainConfig()
