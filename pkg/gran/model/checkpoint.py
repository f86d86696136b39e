"""Binary checkpoint files.

Layout, all integers little-endian u32:

    b"GRAN" | version | blob length | blob (TOML text, utf-8) | tensor count
    per tensor: name length | name (utf-8) | 4 dims | float32 values

Tensors with fewer than four dimensions are padded with trailing ones.
Model weights come first in registration order, followed by optional
optimizer moments named `adam.m.<param>` and `adam.v.<param>`. The blob
holds the `[net]` and `[train]` config and, for training checkpoints, a
`[state]` table with the step counters.
"""

import math
import struct
from typing import BinaryIO, Dict, Mapping, NamedTuple, Optional, Tuple

import numpy as np
import toml

from ..common.typing import GranConfig, TrainConfig
from ..common.utils import config_from_text, config_to_text
from ..core.tensor import DEFAULT_DTYPE
from .gran import GRAN

MAGIC = b"GRAN"
VERSION = 1
MAX_DIMS = 4
ADAM_PREFIXES = ("adam.m.", "adam.v.")

_U32 = struct.Struct("<I")


class CheckpointError(Exception):
    """A checkpoint cannot be read or applied."""


class CheckpointFormatError(CheckpointError):
    """Bad magic, unknown version or malformed content."""


class CheckpointTruncatedError(CheckpointError):
    """The file ends before its declared content."""


class CheckpointShapeError(CheckpointError):
    """Stored tensor shapes disagree with the model."""


class Checkpoint(NamedTuple):
    """Decoded checkpoint content."""

    config: GranConfig
    tensors: Dict[str, np.ndarray]
    step: int = 0
    adam_step: int = 0

    def weights(self) -> Dict[str, np.ndarray]:
        """Model parameters only."""
        return {
            name: value
            for name, value in self.tensors.items()
            if not name.startswith(ADAM_PREFIXES)
        }

    def moments(self, prefix: str) -> Dict[str, np.ndarray]:
        """Optimizer tensors under `adam.m.` or `adam.v.`, prefix removed."""
        return {
            name[len(prefix) :]: value
            for name, value in self.tensors.items()
            if name.startswith(prefix)
        }


def _padded_dims(shape: Tuple[int, ...], name: str) -> Tuple[int, ...]:
    if len(shape) > MAX_DIMS:
        raise CheckpointShapeError(
            "{} has {} dims, at most {} are stored".format(
                name, len(shape), MAX_DIMS
            )
        )
    return tuple(shape) + (1,) * (MAX_DIMS - len(shape))


def encode(ckpt: Checkpoint) -> bytes:
    """Serialize a checkpoint; equal content gives equal bytes."""
    text = config_to_text(ckpt.config)
    if ckpt.step or ckpt.adam_step:
        text += "\n" + toml.dumps(
            {"state": {"step": ckpt.step, "adam_step": ckpt.adam_step}}
        )
    blob = text.encode("utf-8")
    chunks = [MAGIC, _U32.pack(VERSION), _U32.pack(len(blob)), blob]
    chunks.append(_U32.pack(len(ckpt.tensors)))
    for name, value in ckpt.tensors.items():
        raw_name = name.encode("utf-8")
        chunks.append(_U32.pack(len(raw_name)))
        chunks.append(raw_name)
        dims = _padded_dims(value.shape, name)
        chunks.append(struct.pack("<4I", *dims))
        chunks.append(np.ascontiguousarray(value, dtype="<f4").tobytes())
    return b"".join(chunks)


class _Reader:
    """Cursor over checkpoint bytes that reports truncation."""

    def __init__(self, data: bytes, path: str) -> None:
        self.data = data
        self.path = path
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise CheckpointTruncatedError(
                "{}: file ends while reading {} ({} of {} bytes)".format(
                    self.path, what, len(self.data) - self.pos, size
                )
            )
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def u32(self, what: str) -> int:
        value: int = _U32.unpack(self.take(4, what))[0]
        return value


def decode(data: bytes, path: str = "<bytes>") -> Checkpoint:
    """Parse checkpoint bytes."""
    reader = _Reader(data, path)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise CheckpointFormatError(
            "{}: bad magic {!r}, expected {!r}".format(path, magic, MAGIC)
        )
    version = reader.u32("version")
    if version != VERSION:
        raise CheckpointFormatError(
            "{}: unsupported version {}, expected {}".format(
                path, version, VERSION
            )
        )
    blob = reader.take(reader.u32("config length"), "config")
    try:
        text = blob.decode("utf-8")
        raw = toml.loads(text)
        state = raw.pop("state", {})
        config = config_from_text(toml.dumps(raw))
    except (UnicodeDecodeError, toml.TomlDecodeError, ValueError) as err:
        raise CheckpointFormatError(
            "{}: invalid config: {}".format(path, err)
        ) from err

    tensors: Dict[str, np.ndarray] = {}
    for index in range(reader.u32("tensor count")):
        what = "tensor {}".format(index)
        raw_name = reader.take(reader.u32(what + " name length"), what)
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as err:
            raise CheckpointFormatError(
                "{}: {} has an invalid name".format(path, what)
            ) from err
        if name in tensors:
            raise CheckpointFormatError(
                "{}: duplicate tensor {}".format(path, name)
            )
        dims = struct.unpack("<4I", reader.take(16, name + " dims"))
        count = math.prod(dims)
        values = np.frombuffer(reader.take(4 * count, name), dtype="<f4")
        tensors[name] = values.reshape(dims).astype(np.float32)
    if reader.pos != len(data):
        raise CheckpointFormatError(
            "{}: {} trailing bytes".format(path, len(data) - reader.pos)
        )
    return Checkpoint(
        config,
        tensors,
        int(state.get("step", 0)),
        int(state.get("adam_step", 0)),
    )


def write_checkpoint(path: str, ckpt: Checkpoint) -> None:
    """Write `ckpt` to `path`."""
    data = encode(ckpt)
    with open(path, "wb") as fp:
        fp.write(data)


def read_checkpoint(path: str) -> Checkpoint:
    """Read and parse the checkpoint at `path`."""
    with open(path, "rb") as fp:
        data = fp.read()
    return decode(data, path)


def model_checkpoint(
    model: GRAN,
    train: Optional[TrainConfig] = None,
    step: int = 0,
    adam_step: int = 0,
    optimizer: Optional[Mapping[str, np.ndarray]] = None,
) -> Checkpoint:
    """Snapshot a model, optionally with training state."""
    config = GranConfig(net=model.cfg, train=train or TrainConfig())
    tensors = dict(model.state_dict())
    tensors.update(optimizer or {})
    return Checkpoint(config, tensors, step, adam_step)


def save(
    model: GRAN,
    path: str,
    train: Optional[TrainConfig] = None,
) -> None:
    """Write the model weights and config to `path`."""
    write_checkpoint(path, model_checkpoint(model, train))


def restore_weights(
    shapes: Mapping[str, Tuple[int, ...]],
    stored: Mapping[str, np.ndarray],
    path: str = "<checkpoint>",
) -> Dict[str, np.ndarray]:
    """Unpad stored tensors to the expected shapes, checking every one."""
    missing = [name for name in shapes if name not in stored]
    unexpected = [name for name in stored if name not in shapes]
    if missing or unexpected:
        raise CheckpointShapeError(
            "{}: missing tensors {} unexpected tensors {}".format(
                path, missing[:3], unexpected[:3]
            )
        )
    out = {}
    for name, shape in shapes.items():
        value = stored[name]
        if value.shape != _padded_dims(shape, name):
            raise CheckpointShapeError(
                "{}: {} has shape {}, model expects {}".format(
                    path, name, value.shape, shape
                )
            )
        out[name] = value.reshape(shape)
    return out


def load(
    path: str, dtype: np.dtype = DEFAULT_DTYPE
) -> Tuple[GRAN, Checkpoint]:
    """Rebuild the model stored at `path`."""
    ckpt = read_checkpoint(path)
    model = GRAN(ckpt.config.net, dtype)
    shapes = {name: param.shape for name, param in model.named_parameters()}
    model.load_state_dict(restore_weights(shapes, ckpt.weights(), path))
    return model, ckpt
