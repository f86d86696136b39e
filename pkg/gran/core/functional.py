"""Differentiable primitives over NCHW tensors.

All padding is zero padding. Loops over kernel offsets run in a fixed
order so that results are reproducible bit for bit on one thread.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Function, ShapeError, Tensor


def _check_4d(x: Tensor, op: str) -> Tuple[int, int, int, int]:
    if x.ndim != 4:
        raise ShapeError(
            "{} expects an NCHW tensor, got shape {}".format(op, x.shape)
        )
    n, c, h, w = x.shape
    return n, c, h, w


@dataclass(frozen=True)
class ConvParams:
    """Weights and geometry of one 2-D convolution."""

    weight: Tensor
    bias: Optional[Tensor] = None
    stride: int = 1
    padding: int = 0
    groups: int = 1

    @property
    def kernel_size(self) -> int:
        """Side of the square kernel."""
        return int(self.weight.shape[-1])

    @property
    def out_channels(self) -> int:
        """Output channel count."""
        return int(self.weight.shape[0])

    @property
    def in_channels(self) -> int:
        """Input channel count across all groups."""
        return int(self.weight.shape[1]) * self.groups

    def check(self) -> None:
        """Validate shapes and geometry."""
        shape = self.weight.shape
        if len(shape) != 4 or shape[2] != shape[3]:
            raise ShapeError(
                "conv weight must be [C_out, C_in/groups, k, k], "
                "got {}".format(shape)
            )
        if self.stride < 1 or self.padding < 0 or self.groups < 1:
            raise ShapeError(
                "invalid stride={} padding={} groups={}".format(
                    self.stride, self.padding, self.groups
                )
            )
        if self.out_channels % self.groups != 0:
            raise ShapeError(
                "C_out={} is not divisible by groups={}".format(
                    self.out_channels, self.groups
                )
            )
        if self.bias is not None and self.bias.shape != (self.out_channels,):
            raise ShapeError(
                "bias shape {} != ({},)".format(
                    self.bias.shape, self.out_channels
                )
            )


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Output length (size + 2 * padding - kernel) / stride + 1."""
    return (size + 2 * padding - kernel) // stride + 1


class Conv2d(Function):
    """Grouped 2-D cross-correlation with optional bias."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        x, weight = arrays[0], arrays[1]
        stride, padding = self.options["stride"], self.options["padding"]
        groups = self.options["groups"]
        k = weight.shape[-1]
        if padding:
            x = np.pad(
                x, ((0, 0), (0, 0), (padding, padding), (padding, padding))
            )
        self.padded_shape = x.shape
        # (N, C, H', W', k, k)
        windows = sliding_window_view(x, (k, k), axis=(2, 3))[
            :, :, ::stride, ::stride
        ]
        self.windows = windows
        n, c, ho, wo = windows.shape[:4]
        c_out = weight.shape[0]
        if groups == c and c_out == c:
            out = np.einsum("nchwij,cij->nchw", windows, weight[:, 0])
        else:
            c_group, o_group = c // groups, c_out // groups
            out = np.empty((n, c_out, ho, wo), dtype=x.dtype)
            for g in range(groups):
                part = np.tensordot(
                    windows[:, g * c_group : (g + 1) * c_group],
                    weight[g * o_group : (g + 1) * o_group],
                    axes=([1, 4, 5], [1, 2, 3]),
                )
                out[:, g * o_group : (g + 1) * o_group] = part.transpose(
                    0, 3, 1, 2
                )
        if len(arrays) == 3:
            out = out + arrays[2][None, :, None, None]
        return out

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        weight = self.inputs[1].data
        stride, padding = self.options["stride"], self.options["padding"]
        groups = self.options["groups"]
        windows = self.windows
        k = weight.shape[-1]
        c = windows.shape[1]
        c_out = weight.shape[0]
        ho, wo = grad.shape[2], grad.shape[3]

        if groups == c and c_out == c:
            grad_weight = np.einsum("nchw,nchwij->cij", grad, windows)[
                :, None
            ]
            # (N, C, H', W', k, k)
            cols = grad[:, :, :, :, None, None] * weight[:, 0][
                None, :, None, None
            ]
        else:
            c_group, o_group = c // groups, c_out // groups
            grad_weight = np.empty_like(weight)
            cols = np.empty(windows.shape, dtype=grad.dtype)
            for g in range(groups):
                grad_g = grad[:, g * o_group : (g + 1) * o_group]
                grad_weight[g * o_group : (g + 1) * o_group] = np.tensordot(
                    grad_g,
                    windows[:, g * c_group : (g + 1) * c_group],
                    axes=([0, 2, 3], [0, 2, 3]),
                )
                # (N, H', W', C_g, k, k)
                part = np.tensordot(
                    grad_g,
                    weight[g * o_group : (g + 1) * o_group],
                    axes=([1], [0]),
                )
                cols[:, g * c_group : (g + 1) * c_group] = part.transpose(
                    0, 3, 1, 2, 4, 5
                )

        grad_padded = np.zeros(self.padded_shape, dtype=grad.dtype)
        for i in range(k):
            for j in range(k):
                grad_padded[
                    :,
                    :,
                    i : i + stride * (ho - 1) + 1 : stride,
                    j : j + stride * (wo - 1) + 1 : stride,
                ] += cols[:, :, :, :, i, j]
        if padding:
            h, w = self.padded_shape[2], self.padded_shape[3]
            grad_x = grad_padded[
                :, :, padding : h - padding, padding : w - padding
            ]
        else:
            grad_x = grad_padded
        if len(self.inputs) == 3:
            return grad_x, grad_weight, grad.sum(axis=(0, 2, 3))
        return grad_x, grad_weight


def conv2d(x: Tensor, params: ConvParams) -> Tensor:
    """Convolve `x` with `params`; output (N, C_out, H', W')."""
    _, c, h, w = _check_4d(x, "conv2d")
    params.check()
    if c != params.in_channels:
        raise ShapeError(
            "conv2d input has {} channels, weight {} expects {}".format(
                c, params.weight.shape, params.in_channels
            )
        )
    k = params.kernel_size
    ho = conv_output_size(h, k, params.stride, params.padding)
    wo = conv_output_size(w, k, params.stride, params.padding)
    if ho < 1 or wo < 1:
        raise ShapeError(
            "conv2d of {}x{} input with k={} padding={} stride={} gives "
            "empty output".format(h, w, k, params.padding, params.stride)
        )
    inputs = [x, params.weight]
    if params.bias is not None:
        inputs.append(params.bias)
    return Conv2d.apply(
        *inputs,
        stride=params.stride,
        padding=params.padding,
        groups=params.groups,
    )


def depthwise_conv2d(x: Tensor, params: ConvParams) -> Tensor:
    """Per-channel convolution: output channel i sees input channel i."""
    c = _check_4d(x, "depthwise_conv2d")[1]
    if not params.groups == c == params.out_channels:
        raise ShapeError(
            "depthwise conv needs groups == C_in == C_out, got groups={} "
            "C_in={} C_out={}".format(params.groups, c, params.out_channels)
        )
    return conv2d(x, params)


class ReLU(Function):
    """max(x, 0)."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        self.mask = arrays[0] > 0
        return np.where(self.mask, arrays[0], 0).astype(arrays[0].dtype)

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (grad * self.mask,)


def relu(x: Tensor) -> Tensor:
    """Rectified linear unit."""
    return ReLU.apply(x)


class Sigmoid(Function):
    """Logistic function, evaluated through tanh for stability."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        x = arrays[0]
        half = x.dtype.type(0.5)
        self.out = half * (np.tanh(half * x) + x.dtype.type(1))
        return self.out

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (grad * self.out * (1 - self.out),)


def sigmoid(x: Tensor) -> Tensor:
    """1 / (1 + exp(-x)); exactly 0.5 at 0."""
    return Sigmoid.apply(x)


class Add(Function):
    """Elementwise sum of equally shaped tensors."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return arrays[0] + arrays[1]

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return grad, grad


def add(a: Tensor, b: Tensor) -> Tensor:
    """a + b."""
    if a.shape != b.shape:
        raise ShapeError("add of shapes {} and {}".format(a.shape, b.shape))
    return Add.apply(a, b)


class Mul(Function):
    """x times a scale that may broadcast over H,W or over C."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return arrays[0] * arrays[1]

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        x, scale = self.inputs[0].data, self.inputs[1].data
        grad_scale = grad * x
        axes = tuple(
            axis
            for axis in range(4)
            if scale.shape[axis] == 1 and x.shape[axis] != 1
        )
        if axes:
            grad_scale = grad_scale.sum(axis=axes, keepdims=True)
        return grad * scale, grad_scale


def mul(x: Tensor, scale: Tensor) -> Tensor:
    """x * scale with scale shaped like x, (N,C,1,1) or (N,1,H,W)."""
    n, c, h, w = _check_4d(x, "mul")
    allowed = ((n, c, h, w), (n, c, 1, 1), (n, 1, h, w))
    if scale.shape not in allowed:
        raise ShapeError(
            "mul cannot scale {} by {}".format(x.shape, scale.shape)
        )
    return Mul.apply(x, scale)


class Concat(Function):
    """Concatenate along channels."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return np.concatenate(arrays, axis=1)

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        bounds = np.cumsum([t.shape[1] for t in self.inputs])[:-1]
        return tuple(np.split(grad, bounds, axis=1))


def concat_channels(*xs: Tensor) -> Tensor:
    """Stack tensors along the channel axis."""
    if not xs:
        raise ShapeError("concat_channels needs at least one tensor")
    shapes = [_check_4d(x, "concat_channels") for x in xs]
    if len({(n, h, w) for n, _, h, w in shapes}) != 1:
        raise ShapeError(
            "concat_channels of mismatched shapes {}".format(
                [x.shape for x in xs]
            )
        )
    return Concat.apply(*xs)


class SliceChannels(Function):
    """Channels [start, stop)."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return arrays[0][:, self.options["start"] : self.options["stop"]]

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        full = np.zeros(self.inputs[0].shape, dtype=grad.dtype)
        full[:, self.options["start"] : self.options["stop"]] = grad
        return (full,)


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    """Keep channels start..stop-1."""
    c = _check_4d(x, "slice_channels")[1]
    if not 0 <= start < stop <= c:
        raise ShapeError(
            "cannot slice channels [{}, {}) of {}".format(start, stop, c)
        )
    return SliceChannels.apply(x, start=start, stop=stop)


class Pad2d(Function):
    """Zero padding of H and W."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        p = self.options["padding"]
        return np.pad(arrays[0], ((0, 0), (0, 0), (p, p), (p, p)))

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        p = self.options["padding"]
        h, w = grad.shape[2], grad.shape[3]
        return (grad[:, :, p : h - p, p : w - p],)


def pad2d(x: Tensor, padding: int) -> Tensor:
    """Surround every plane with `padding` zeros."""
    _check_4d(x, "pad2d")
    if padding < 0:
        raise ShapeError("negative padding {}".format(padding))
    return Pad2d.apply(x, padding=padding)


class AvgPool(Function):
    """Mean over each H x W plane."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return arrays[0].mean(axis=(2, 3), keepdims=True)

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        shape = self.inputs[0].shape
        area = shape[2] * shape[3]
        return (np.broadcast_to(grad / area, shape).copy(),)


class MaxPool(Function):
    """Max over each H x W plane; ties share the gradient."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        x = arrays[0]
        out = x.max(axis=(2, 3), keepdims=True)
        mask = x == out
        self.mask = mask / mask.sum(axis=(2, 3), keepdims=True)
        return out

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return ((grad * self.mask).astype(grad.dtype),)


def _check_plane(x: Tensor, op: str) -> None:
    h, w = _check_4d(x, op)[2:]
    if h < 1 or w < 1:
        raise ShapeError("{} of an empty {}x{} plane".format(op, h, w))


def global_avg_pool(x: Tensor) -> Tensor:
    """Per-channel spatial mean, shape (N, C, 1, 1)."""
    _check_plane(x, "global_avg_pool")
    return AvgPool.apply(x)


def global_max_pool(x: Tensor) -> Tensor:
    """Per-channel spatial max, shape (N, C, 1, 1)."""
    _check_plane(x, "global_max_pool")
    return MaxPool.apply(x)


class ChannelMeanMax(Function):
    """Per-pixel mean and max over channels."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        x = arrays[0]
        peak = x.max(axis=1, keepdims=True)
        mask = x == peak
        self.mask = mask / mask.sum(axis=1, keepdims=True)
        return np.concatenate([x.mean(axis=1, keepdims=True), peak], axis=1)

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        c = self.inputs[0].shape[1]
        grad_x = grad[:, :1] / c + grad[:, 1:] * self.mask
        return (grad_x.astype(grad.dtype),)


def channel_mean_max(x: Tensor) -> Tensor:
    """Spatial descriptor (N, 2, H, W): channel mean, then channel max."""
    if _check_4d(x, "channel_mean_max")[1] < 1:
        raise ShapeError("channel_mean_max needs at least one channel")
    return ChannelMeanMax.apply(x)


def _shuffle(array: np.ndarray, r: int) -> np.ndarray:
    n, c, h, w = array.shape
    out = array.reshape(n, c // (r * r), r, r, h, w)
    return out.transpose(0, 1, 4, 2, 5, 3).reshape(
        n, c // (r * r), h * r, w * r
    )


def _unshuffle(array: np.ndarray, r: int) -> np.ndarray:
    n, c, h, w = array.shape
    out = array.reshape(n, c, h // r, r, w // r, r)
    return out.transpose(0, 1, 3, 5, 2, 4).reshape(
        n, c * r * r, h // r, w // r
    )


class PixelShuffle(Function):
    """(N, r^2 C, H, W) -> (N, C, rH, rW)."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return _shuffle(arrays[0], self.options["factor"])

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (_unshuffle(grad, self.options["factor"]),)


class PixelUnshuffle(Function):
    """(N, C, rH, rW) -> (N, r^2 C, H, W)."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return _unshuffle(arrays[0], self.options["factor"])

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        return (_shuffle(grad, self.options["factor"]),)


def pixel_shuffle(x: Tensor, factor: int) -> Tensor:
    """Sub-pixel rearrangement of r^2 channel groups into r x r blocks."""
    c = _check_4d(x, "pixel_shuffle")[1]
    if factor < 1 or c % (factor * factor) != 0:
        raise ShapeError(
            "pixel_shuffle needs channels divisible by {}^2, got {}".format(
                factor, c
            )
        )
    return PixelShuffle.apply(x, factor=factor)


def pixel_unshuffle(x: Tensor, factor: int) -> Tensor:
    """Inverse of `pixel_shuffle`."""
    h, w = _check_4d(x, "pixel_unshuffle")[2:]
    if factor < 1 or h % factor != 0 or w % factor != 0:
        raise ShapeError(
            "pixel_unshuffle needs H, W divisible by {}, got {}x{}".format(
                factor, h, w
            )
        )
    return PixelUnshuffle.apply(x, factor=factor)


class SeparableResize(Function):
    """rows @ x @ cols^T over the last two axes; the matrices are fixed."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        x, rows, cols = arrays
        out = np.einsum("oh,nchw->ncow", rows, x)
        return np.einsum("pw,ncow->ncop", cols, out)

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        rows, cols = self.inputs[1].data, self.inputs[2].data
        out = np.einsum("oh,ncop->nchp", rows, grad)
        return np.einsum("pw,nchp->nchw", cols, out), None, None


def resize_separable(x: Tensor, rows: Tensor, cols: Tensor) -> Tensor:
    """Apply (H', H) row and (W', W) column weights to every plane."""
    h, w = _check_4d(x, "resize_separable")[2:]
    if rows.ndim != 2 or cols.ndim != 2:
        raise ShapeError("resize_separable expects 2-D weight matrices")
    if rows.shape[1] != h or cols.shape[1] != w:
        raise ShapeError(
            "resize_separable cannot apply {} and {} to {}x{}".format(
                rows.shape, cols.shape, h, w
            )
        )
    return SeparableResize.apply(x, rows, cols)


class Mean(Function):
    """Mean of all elements, shape ()."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        return np.asarray(arrays[0].mean(), dtype=arrays[0].dtype)

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        shape = self.inputs[0].shape
        size = int(np.prod(shape))
        return (np.full(shape, grad / size, dtype=grad.dtype),)


def mean(x: Tensor) -> Tensor:
    """Scalar mean."""
    if x.size == 0:
        raise ShapeError("mean of an empty tensor")
    return Mean.apply(x)


class L1Loss(Function):
    """Mean absolute difference, shape ()."""

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        diff = arrays[0] - arrays[1]
        self.sign = np.sign(diff)
        return np.asarray(np.abs(diff).mean(), dtype=diff.dtype)

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        grad_pred = (grad / self.sign.size * self.sign).astype(grad.dtype)
        return grad_pred, -grad_pred


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """mean(|pred - target|)."""
    if pred.shape != target.shape:
        raise ShapeError(
            "l1_loss of shapes {} and {}".format(pred.shape, target.shape)
        )
    return L1Loss.apply(pred, target)


def split_channels(x: Tensor, sizes: List[int]) -> List[Tensor]:
    """Consecutive channel slices of the given sizes."""
    out, start = [], 0
    for size in sizes:
        out.append(slice_channels(x, start, start + size))
        start += size
    return out
