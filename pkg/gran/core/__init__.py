"""Dense tensors, differentiable primitives and the gradient tape."""

from .functional import (
    ConvParams,
    add,
    channel_mean_max,
    concat_channels,
    conv2d,
    depthwise_conv2d,
    global_avg_pool,
    global_max_pool,
    l1_loss,
    mean,
    mul,
    pad2d,
    pixel_shuffle,
    pixel_unshuffle,
    relu,
    sigmoid,
    slice_channels,
)
from .tensor import (
    GradTape,
    NonFiniteError,
    ShapeError,
    TapeError,
    Tensor,
    backward,
)

__all__ = [
    "ConvParams",
    "GradTape",
    "NonFiniteError",
    "ShapeError",
    "TapeError",
    "Tensor",
    "add",
    "backward",
    "channel_mean_max",
    "concat_channels",
    "conv2d",
    "depthwise_conv2d",
    "global_avg_pool",
    "global_max_pool",
    "l1_loss",
    "mean",
    "mul",
    "pad2d",
    "pixel_shuffle",
    "pixel_unshuffle",
    "relu",
    "sigmoid",
    "slice_channels",
]
