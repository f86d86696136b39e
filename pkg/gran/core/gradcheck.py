"""Finite-difference verification of tape gradients."""

from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from .tensor import GradTape, Tensor

LossFn = Callable[[Sequence[Tensor]], Tensor]


class GradCheckResult(NamedTuple):
    """Relative errors of analytic vs. numeric gradients per input."""

    errors: List[float]
    checked: List[int]

    @property
    def max_error(self) -> float:
        """Largest relative error over all inputs."""
        return max(self.errors) if self.errors else 0.0


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||), 0 when both vanish."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def analytic_gradients(
    loss_fn: LossFn, arrays: Sequence[np.ndarray]
) -> List[np.ndarray]:
    """Tape gradients of `loss_fn` at `arrays`."""
    leaves = [Tensor(array, requires_grad=True) for array in arrays]
    with GradTape() as tape:
        loss = loss_fn(leaves)
    grads = tape.backward(loss)
    return [grads[leaf] for leaf in leaves]


def check_gradients(
    loss_fn: LossFn,
    arrays: Sequence[np.ndarray],
    eps: float = 1e-5,
    samples: Optional[int] = None,
    seed: int = 0,
) -> GradCheckResult:
    """Compare tape gradients with central differences in 64-bit.

    Args:
        loss_fn: maps input tensors to a scalar loss tensor.
        arrays: evaluation point; converted to float64.
        eps: finite-difference step.
        samples: coordinates sampled per input, all if None.
        seed: chooses the sampled coordinates.
    """
    point = [np.array(array, dtype=np.float64) for array in arrays]
    analytic = analytic_gradients(loss_fn, point)
    rng = np.random.default_rng(seed)

    def evaluate(values: List[np.ndarray]) -> float:
        return loss_fn([Tensor(value) for value in values]).item()

    errors, checked = [], []
    for index, array in enumerate(point):
        flat_size = array.size
        if samples is None or samples >= flat_size:
            coords = np.arange(flat_size)
        else:
            coords = np.sort(rng.choice(flat_size, samples, replace=False))
        numeric = np.zeros(len(coords))
        for pos, coord in enumerate(coords):
            shifted = [value.copy() for value in point]
            shifted[index].reshape(-1)[coord] += eps
            upper = evaluate(shifted)
            shifted[index].reshape(-1)[coord] -= 2 * eps
            lower = evaluate(shifted)
            numeric[pos] = (upper - lower) / (2 * eps)
        errors.append(
            relative_error(analytic[index].reshape(-1)[coords], numeric)
        )
        checked.append(len(coords))
    return GradCheckResult(errors, checked)
