"""The super-resolution network and its checkpoint files."""

from .checkpoint import (
    Checkpoint,
    CheckpointError,
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    load,
    save,
)
from .gran import GRAN, ResidualGroup, build, layer_census

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "CheckpointFormatError",
    "CheckpointShapeError",
    "CheckpointTruncatedError",
    "GRAN",
    "ResidualGroup",
    "build",
    "layer_census",
    "load",
    "save",
]
