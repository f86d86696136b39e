"""Adam and the step learning-rate schedule."""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from ..common.typing import TrainConfig
from ..core.tensor import NonFiniteError, ShapeError

Arrays = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """Step counter and per-parameter moments."""

    step: int = 0
    m: Arrays = field(default_factory=dict)
    v: Arrays = field(default_factory=dict)

    def moments(self) -> Arrays:
        """Moments named for a checkpoint: adam.m.<param>, adam.v.<param>."""
        named = {"adam.m." + name: value for name, value in self.m.items()}
        named.update(
            {"adam.v." + name: value for name, value in self.v.items()}
        )
        return named


def lr_schedule(step: int, cfg: TrainConfig) -> float:
    """lr0 * 0.5 ** floor(step / interval)."""
    if step < 0:
        raise ValueError("step must be non-negative, got {}".format(step))
    return float(cfg.lr * 0.5 ** (step // cfg.lr_interval))


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    cfg: TrainConfig,
) -> Tuple[Arrays, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched.

    Moments keep the dtype of their parameter.
    """
    for name, grad in grads.items():
        if not np.isfinite(grad).all():
            raise NonFiniteError(
                "non-finite gradient for {} at step {}".format(
                    name, state.step + 1
                )
            )
    step = state.step + 1
    beta1, beta2 = cfg.beta1, cfg.beta2
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    new_params: Arrays = {}
    new_state = AdamState(step)
    for name, param in params.items():
        grad = grads[name]
        if grad.shape != param.shape:
            raise ShapeError(
                "gradient shape {} != parameter shape {} for {}".format(
                    grad.shape, param.shape, name
                )
            )
        dtype = param.dtype
        m = state.m.get(name, np.zeros_like(param))
        v = state.v.get(name, np.zeros_like(param))
        m = (beta1 * m + (1.0 - beta1) * grad).astype(dtype)
        v = (beta2 * v + (1.0 - beta2) * grad * grad).astype(dtype)
        m_hat = m / correction1
        v_hat = v / correction2
        update = lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
        new_params[name] = (param - update).astype(dtype)
        new_state.m[name] = m
        new_state.v[name] = v
    return new_params, new_state
