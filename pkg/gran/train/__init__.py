"""Adam optimization of the network on patch batches."""

from .optim import AdamState, adam_step, lr_schedule
from .trainer import TrainResult, resume, train_loop, train_step

__all__ = [
    "AdamState",
    "TrainResult",
    "adam_step",
    "lr_schedule",
    "resume",
    "train_loop",
    "train_step",
]
