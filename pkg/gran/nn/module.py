"""Parameter containers shared by every layer."""

from typing import Dict, Iterator, List, Mapping, Tuple, TypeVar, Union

import numpy as np

from ..core.tensor import (
    DEFAULT_DTYPE,
    Gradients,
    ShapeError,
    Tensor,
    check_finite,
)


class Parameter:
    """Trainable array exposed to the forward pass as a leaf tensor.

    The values are immutable between steps; `assign` swaps in a new leaf.
    """

    __slots__ = ("tensor",)

    def __init__(self, shape: Tuple[int, ...], dtype: np.dtype) -> None:
        """Zero-filled parameter of the given shape."""
        self.tensor = Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)

    @property
    def shape(self) -> Tuple[int, ...]:
        """Parameter shape."""
        return self.tensor.shape

    @property
    def data(self) -> np.ndarray:
        """Read-only values."""
        return self.tensor.data

    def assign(self, array: np.ndarray) -> None:
        """Replace the values; the shape must not change."""
        if array.shape != self.shape:
            raise ShapeError(
                "cannot assign shape {} to parameter of shape {}".format(
                    array.shape, self.shape
                )
            )
        self.tensor = Tensor(
            array, requires_grad=True, dtype=self.tensor.dtype
        )


Entry = Union[Parameter, "Module"]
ModuleT = TypeVar("ModuleT", bound="Module")


class Module:
    """Tree of named parameters and sub-modules.

    Children are kept in registration order; `named_parameters` walks them
    depth-first so that names and order are stable across builds.
    """

    def __init__(self, dtype: np.dtype = DEFAULT_DTYPE) -> None:
        """Empty module whose parameters use `dtype`."""
        self.dtype = np.dtype(dtype)
        self._entries: Dict[str, Entry] = {}

    def add_parameter(self, name: str, shape: Tuple[int, ...]) -> Parameter:
        """Register a zero-filled parameter."""
        assert name not in self._entries, name
        param = Parameter(shape, self.dtype)
        self._entries[name] = param
        return param

    def add_module(self, name: str, module: ModuleT) -> ModuleT:
        """Register a child module."""
        assert name not in self._entries, name
        self._entries[name] = module
        return module

    def named_parameters(
        self, prefix: str = ""
    ) -> Iterator[Tuple[str, Parameter]]:
        """Yield (dotted name, parameter) in registration order."""
        for name, entry in self._entries.items():
            full = prefix + name
            if isinstance(entry, Parameter):
                yield full, entry
            else:
                yield from entry.named_parameters(full + ".")

    def named_modules(
        self, prefix: str = ""
    ) -> Iterator[Tuple[str, "Module"]]:
        """Yield (dotted name, module) for every descendant, parents first."""
        for name, entry in self._entries.items():
            if isinstance(entry, Module):
                full = prefix + name
                yield full, entry
                yield from entry.named_modules(full + ".")

    def num_parameters(self) -> int:
        """Total number of scalar weights."""
        return sum(param.tensor.size for _, param in self.named_parameters())

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Name to read-only array, in registration order."""
        return {name: param.data for name, param in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Assign every parameter from `state`; names must match exactly.

        Shapes and values are validated first, so a rejected state leaves
        every parameter untouched.
        """
        names = [name for name, _ in self.named_parameters()]
        missing = [name for name in names if name not in state]
        unexpected = sorted(set(state) - set(names))
        if missing or unexpected:
            raise KeyError(
                "state mismatch: missing {} unexpected {}".format(
                    missing[:3], unexpected[:3]
                )
            )
        arrays = {}
        for name, param in self.named_parameters():
            array = np.asarray(state[name], dtype=self.dtype)
            if array.shape != param.shape:
                raise ShapeError(
                    "cannot assign shape {} to {} of shape {}".format(
                        array.shape, name, param.shape
                    )
                )
            check_finite(array, name)
            arrays[name] = array
        for name, param in self.named_parameters():
            param.assign(arrays[name])

    def gradients(self, grads: Gradients) -> Dict[str, np.ndarray]:
        """Key tape gradients by parameter name."""
        out = {}
        for name, param in self.named_parameters():
            grad = grads.get(param.tensor)
            if grad is None:
                grad = np.zeros(param.shape, dtype=self.dtype)
            out[name] = grad
        return out

    def forward(self, x: Tensor) -> Tensor:
        """Compute the module output."""
        raise NotImplementedError

    def __call__(self, x: Tensor) -> Tensor:
        """Alias of `forward`."""
        return self.forward(x)


class ModuleList(Module):
    """Children named 0, 1, 2, ... applied in order."""

    def __init__(
        self, modules: List[Module], dtype: np.dtype = DEFAULT_DTYPE
    ) -> None:
        """Register `modules` under their indices."""
        super().__init__(dtype)
        self.items = list(modules)
        for index, module in enumerate(self.items):
            self.add_module(str(index), module)

    def __len__(self) -> int:
        """Number of children."""
        return len(self.items)

    def __iter__(self) -> Iterator[Module]:
        """Children in order."""
        return iter(self.items)

    def __getitem__(self, index: int) -> Module:
        """Child at `index`."""
        return self.items[index]

    def forward(self, x: Tensor) -> Tensor:
        """Chain the children."""
        for module in self.items:
            x = module(x)
        return x


def initialize(module: Module, seed: int) -> None:
    """Fan-in scaled uniform weights, zero biases, drawn in name order.

    Weight `w` of shape (C_out, C_in/groups, k, k) is drawn from
    U(-b, b) with b = 1 / sqrt(C_in/groups * k * k).
    """
    rng = np.random.default_rng(seed)
    for name, param in module.named_parameters():
        if name.endswith("bias"):
            param.assign(np.zeros(param.shape, dtype=module.dtype))
            continue
        fan_in = int(np.prod(param.shape[1:]))
        bound = 1.0 / np.sqrt(fan_in)
        values = rng.uniform(-bound, bound, param.shape)
        param.assign(values.astype(module.dtype))
