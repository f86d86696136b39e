"""Finite-difference checks of whole modules."""

from typing import Optional, Sequence

import numpy as np

from ..core.functional import mean, mul
from ..core.gradcheck import GradCheckResult, check_gradients
from ..core.tensor import Tensor
from .module import Module


def check_module(
    module: Module,
    x: np.ndarray,
    eps: float = 1e-5,
    samples: Optional[int] = 8,
    seed: int = 0,
) -> GradCheckResult:
    """Check d(loss)/d(input) and d(loss)/d(every parameter).

    The loss is a fixed random weighting of the output, so every output
    element contributes. `module` must be built in float64. Errors are
    reported as [input, parameter 0, parameter 1, ...].
    """
    assert module.dtype == np.float64, "gradient checks run in float64"
    params = [param for _, param in module.named_parameters()]
    originals = [param.tensor for param in params]
    out_shape = module(Tensor(x, dtype=np.float64)).shape
    weights = np.random.default_rng(seed).standard_normal(out_shape)
    scale = Tensor(weights * weights.size)

    def loss_fn(tensors: Sequence[Tensor]) -> Tensor:
        for param, tensor in zip(params, tensors[1:]):
            param.tensor = tensor
        return mean(mul(module(tensors[0]), scale))

    arrays = [np.asarray(x, dtype=np.float64)] + [t.data for t in originals]
    try:
        return check_gradients(loss_fn, arrays, eps, samples, seed)
    finally:
        for param, tensor in zip(params, originals):
            param.tensor = tensor
