"""Immutable dense tensors and the reverse-mode gradient tape.

Every primitive is a `Function` subclass with a `forward` over numpy arrays
and a `backward` that maps the output gradient to one gradient per input.
`Function.apply` runs the forward pass, rejects non-finite results and, if a
`GradTape` is active and any input is tracked, records the call on the tape.
"""

import threading
from abc import abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

DEFAULT_DTYPE = np.float32
FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

ArrayLike = Union[np.ndarray, float, Sequence[float]]
Gradients = Dict["Tensor", np.ndarray]


class ShapeError(ValueError):
    """Operand shapes or dimensions are incompatible."""


class NonFiniteError(ArithmeticError):
    """A primitive produced NaN or Inf."""


class TapeError(RuntimeError):
    """The gradient tape was misused."""


class Tensor:
    """Dense array of 32- or 64-bit reals that is never modified in place.

    Identity semantics: two tensors with equal values are still distinct
    keys in a gradient dictionary.
    """

    __slots__ = ("_data", "requires_grad", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[np.dtype] = None,
        name: str = "",
    ) -> None:
        """Copy `data` into a read-only array."""
        if dtype is None:
            if isinstance(data, np.ndarray) and data.dtype in FLOAT_DTYPES:
                dtype = data.dtype
            else:
                dtype = np.dtype(DEFAULT_DTYPE)
        array = np.array(data, dtype=dtype)
        if array.dtype not in FLOAT_DTYPES:
            raise TypeError("unsupported dtype {}".format(array.dtype))
        check_finite(array, "Tensor")
        array.setflags(write=False)
        self._data = array
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def wrap(cls, array: np.ndarray) -> "Tensor":
        """Adopt an array produced by a primitive without copying it."""
        tensor = cls.__new__(cls)
        array.setflags(write=False)
        tensor._data = array
        tensor.requires_grad = False
        tensor.name = ""
        return tensor

    @classmethod
    def zeros(
        cls, shape: Tuple[int, ...], dtype: np.dtype = DEFAULT_DTYPE
    ) -> "Tensor":
        """All-zero tensor."""
        return cls.wrap(np.zeros(shape, dtype=dtype))

    @classmethod
    def ones(
        cls, shape: Tuple[int, ...], dtype: np.dtype = DEFAULT_DTYPE
    ) -> "Tensor":
        """All-one tensor."""
        return cls.wrap(np.ones(shape, dtype=dtype))

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the values."""
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        """Dimensions, NCHW for activations and images."""
        return tuple(self._data.shape)

    @property
    def dtype(self) -> np.dtype:
        """Element type, float32 or float64."""
        return self._data.dtype

    @property
    def ndim(self) -> int:
        """Number of dimensions."""
        return int(self._data.ndim)

    @property
    def size(self) -> int:
        """Number of elements."""
        return int(self._data.size)

    def numpy(self) -> np.ndarray:
        """Writable copy of the values."""
        return self._data.copy()

    def item(self) -> float:
        """Value of a single-element tensor."""
        if self.size != 1:
            raise ShapeError(
                "item() needs a single element, got shape {}".format(
                    self.shape
                )
            )
        return float(self._data.reshape(-1)[0])

    def detach(self, requires_grad: bool = False) -> "Tensor":
        """Same values, no tape history."""
        tensor = Tensor.wrap(self._data)
        tensor.requires_grad = requires_grad
        tensor.name = self.name
        return tensor

    def astype(self, dtype: np.dtype) -> "Tensor":
        """Copy converted to another precision."""
        return Tensor(self._data, self.requires_grad, dtype, self.name)

    def __repr__(self) -> str:
        """Shape and dtype only."""
        return "Tensor(shape={}, dtype={}{})".format(
            self.shape,
            self.dtype,
            ", requires_grad=True" if self.requires_grad else "",
        )


def check_finite(array: np.ndarray, where: str) -> None:
    """Raise NonFiniteError if `array` holds NaN or Inf."""
    if not np.isfinite(array).all():
        raise NonFiniteError("non-finite values produced by {}".format(where))


class Function:
    """Base class for differentiable primitives.

    Subclasses read integer options from `self.options`, may save arrays
    from `forward` for use in `backward`, and return from `backward` one
    gradient (or None) per input tensor.
    """

    def __init__(self, *inputs: Tensor, **options: int) -> None:
        """Keep the inputs and options of one call."""
        self.inputs = inputs
        self.options = options

    @abstractmethod
    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        """Compute the output from the input arrays."""
        raise NotImplementedError

    @abstractmethod
    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        """Map dL/d(output) to dL/d(input) for every input."""
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **options: int) -> Tensor:
        """Run the primitive and record it on the active tape."""
        dtypes = {tensor.dtype for tensor in inputs}
        if len(dtypes) > 1:
            raise TypeError(
                "{} got mixed precisions {}".format(
                    cls.__name__, sorted(str(d) for d in dtypes)
                )
            )
        func = cls(*inputs, **options)
        out = func.forward(*(tensor.data for tensor in inputs))
        check_finite(out, cls.__name__)
        result = Tensor.wrap(out)
        tape = current_tape()
        if tape is not None:
            # every input must be visited so each leaf gets registered
            tracked = [tape.is_tracked(tensor) for tensor in inputs]
            if any(tracked):
                tape.record(func, result)
        return result


class _TapeEntry:
    """One recorded primitive call."""

    __slots__ = ("func", "output")

    def __init__(self, func: Function, output: Tensor) -> None:
        self.func = func
        self.output = output


_STATE = threading.local()


def _stack() -> List["GradTape"]:
    stack: Optional[List[GradTape]] = getattr(_STATE, "stack", None)
    if stack is None:
        stack = []
        _STATE.stack = stack
    return stack


def current_tape() -> Optional["GradTape"]:
    """Innermost active tape of the calling thread."""
    stack = _stack()
    return stack[-1] if stack else None


class GradTape:
    """Single-use record of primitive calls for reverse-mode gradients.

    Use as a context manager around the forward pass. Tensors created with
    `requires_grad=True` and tensors passed to `watch` are the leaves whose
    gradients `backward` returns.
    """

    def __init__(self) -> None:
        """Start an empty tape."""
        self._entries: List[_TapeEntry] = []
        self._tracked: Dict[int, Tensor] = {}
        self._leaves: Dict[int, Tensor] = {}
        self._consumed = False
        self.visited = 0

    def __enter__(self) -> "GradTape":
        """Make this tape the active one for the calling thread."""
        if self._consumed:
            raise TapeError("tape was already replayed")
        _stack().append(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        """Deactivate the tape."""
        stack = _stack()
        if not stack or stack[-1] is not self:
            raise TapeError("tapes must be closed in LIFO order")
        stack.pop()

    def __len__(self) -> int:
        """Number of recorded primitive calls."""
        return len(self._entries)

    def watch(self, tensor: Tensor) -> None:
        """Differentiate with respect to `tensor` as a leaf."""
        self._leaves[id(tensor)] = tensor
        self._tracked[id(tensor)] = tensor

    def is_tracked(self, tensor: Tensor) -> bool:
        """Whether gradients must flow through `tensor`."""
        if tensor.requires_grad and id(tensor) not in self._tracked:
            self.watch(tensor)
        return id(tensor) in self._tracked

    def record(self, func: Function, output: Tensor) -> None:
        """Append a primitive call whose output depends on a leaf."""
        if self._consumed:
            raise TapeError("cannot record on a replayed tape")
        self._entries.append(_TapeEntry(func, output))
        self._tracked[id(output)] = output

    def backward(
        self, loss: Tensor, loss_grad: Optional[np.ndarray] = None
    ) -> Gradients:
        """Replay the tape in reverse; return gradients of every leaf."""
        if self._consumed:
            raise TapeError("tape was already replayed")
        if id(loss) not in self._tracked:
            raise TapeError("loss was not produced on this tape")
        if loss_grad is None:
            if loss.size != 1:
                raise ShapeError(
                    "backward needs a scalar loss, got shape {}".format(
                        loss.shape
                    )
                )
            loss_grad = np.ones(loss.shape, dtype=loss.dtype)
        elif loss_grad.shape != loss.shape:
            raise ShapeError(
                "loss gradient shape {} != loss shape {}".format(
                    loss_grad.shape, loss.shape
                )
            )
        self._consumed = True

        grads: Dict[int, np.ndarray] = {id(loss): loss_grad}
        for entry in reversed(self._entries):
            self.visited += 1
            grad = grads.pop(id(entry.output), None)
            if grad is None:
                continue
            input_grads = entry.func.backward(grad)
            assert len(input_grads) == len(entry.func.inputs)
            for tensor, input_grad in zip(entry.func.inputs, input_grads):
                if input_grad is None or id(tensor) not in self._tracked:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + input_grad
                else:
                    grads[key] = input_grad

        result: Gradients = {}
        for key, leaf in self._leaves.items():
            grad = grads.get(key)
            if grad is None:
                grad = np.zeros(leaf.shape, dtype=leaf.dtype)
            result[leaf] = grad
        self._entries = []
        self._tracked = {}
        return result


def backward(
    tape: GradTape, loss: Tensor, loss_grad: Optional[np.ndarray] = None
) -> Gradients:
    """Gradients of `loss` with respect to every leaf recorded on `tape`."""
    return tape.backward(loss, loss_grad)
