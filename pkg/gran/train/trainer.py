"""Training loop: L1 loss on patch batches, Adam, periodic checkpoints.

Files written to `out_dir`:

    loss.log                one `step=<int> lr=<real> loss=<real>` line per
                            `log_every` steps, loss smoothed exponentially
    checkpoint_<step>.gran  every `checkpoint_every` steps
    latest.gran             after every checkpoint and at the end
"""

import os
import os.path as osp
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from tqdm import tqdm

from ..common.logger import logger
from ..common.typing import TrainConfig
from ..common.utils import strict_mode
from ..core.functional import l1_loss
from ..core.tensor import GradTape, NonFiniteError, Tensor
from ..data.dataset import Batch, PatchDataset
from ..model.checkpoint import (
    Checkpoint,
    load,
    model_checkpoint,
    restore_weights,
    write_checkpoint,
)
from ..model.gran import GRAN
from .optim import AdamState, adam_step, lr_schedule

LOSS_LOG = "loss.log"
LATEST = "latest.gran"


class TrainResult(NamedTuple):
    """Final step, optimizer state and per-step losses of one run."""

    step: int
    state: AdamState
    losses: List[float]
    smoothed: List[float]


def compute_gradients(
    model: GRAN, batch: Batch
) -> Tuple[float, Dict[str, np.ndarray]]:
    """L1 loss of the batch and its gradient per parameter name."""
    x = Tensor(batch.lr, dtype=model.dtype)
    target = Tensor(batch.hr, dtype=model.dtype)
    with GradTape() as tape:
        loss = l1_loss(model(x), target)
    grads = model.gradients(tape.backward(loss))
    return loss.item(), grads


def train_step(
    model: GRAN,
    batch: Batch,
    state: AdamState,
    cfg: TrainConfig,
) -> Tuple[float, AdamState]:
    """Forward, backward and one Adam update applied to `model`."""
    loss, grads = compute_gradients(model, batch)
    if not np.isfinite(loss):
        raise NonFiniteError(
            "loss became {} at step {}".format(loss, batch.step)
        )
    params = model.state_dict()
    lr = lr_schedule(batch.step, cfg)
    new_params, new_state = adam_step(params, grads, state, lr, cfg)
    model.load_state_dict(new_params)
    return loss, new_state


def append_line(path: str, line: str) -> None:
    """Append one line to a text file."""
    with open(path, "a") as fp:
        fp.write(line + "\n")


def checkpoint_state(
    model: GRAN, cfg: TrainConfig, step: int, state: AdamState
) -> Checkpoint:
    """Weights, config, step counters and Adam moments."""
    return model_checkpoint(model, cfg, step, state.step, state.moments())


def train_loop(
    model: GRAN,
    dataset: PatchDataset,
    cfg: TrainConfig,
    out_dir: Optional[str] = None,
    start_step: int = 0,
    state: Optional[AdamState] = None,
) -> TrainResult:
    """Train from `start_step` up to `cfg.steps`.

    A non-finite loss or gradient stops training; the weights from before
    the failing step are written to latest.gran and the error is re-raised.
    """
    if dataset.scale != model.scale:
        raise ValueError(
            "dataset scale x{} does not match model scale x{}".format(
                dataset.scale, model.scale
            )
        )
    state = state or AdamState()
    strict = strict_mode(cfg.strict)
    workers = 1 if strict else cfg.workers
    if out_dir is not None and not osp.exists(out_dir):
        os.makedirs(out_dir)
    logger.info(
        "Training steps %d-%d, batch %d, patch %d, %d worker(s)%s",
        start_step,
        cfg.steps,
        cfg.batch_size,
        cfg.patch_size,
        workers,
        ", strict" if strict else "",
    )

    losses: List[float] = []
    smoothed: List[float] = []
    step = start_step
    batches = dataset.batches(start_step, cfg.steps, workers)
    for batch in tqdm(batches, total=max(0, cfg.steps - start_step)):
        try:
            loss, state = train_step(model, batch, state, cfg)
        except NonFiniteError:
            logger.error("Non-finite value at step %d", batch.step)
            if out_dir is not None:
                write_checkpoint(
                    osp.join(out_dir, LATEST),
                    checkpoint_state(model, cfg, step, state),
                )
            raise
        step = batch.step + 1
        losses.append(loss)
        ema = loss
        if smoothed:
            ema = cfg.smoothing * smoothed[-1] + (1.0 - cfg.smoothing) * loss
        smoothed.append(ema)
        if step % cfg.log_every == 0:
            line = "step={} lr={:.6g} loss={:.6f}".format(
                step, lr_schedule(batch.step, cfg), ema
            )
            logger.info(line)
            if out_dir is not None:
                append_line(osp.join(out_dir, LOSS_LOG), line)
        if out_dir is not None and step % cfg.checkpoint_every == 0:
            ckpt = checkpoint_state(model, cfg, step, state)
            write_checkpoint(
                osp.join(out_dir, "checkpoint_{}.gran".format(step)), ckpt
            )
            write_checkpoint(osp.join(out_dir, LATEST), ckpt)

    if out_dir is not None:
        write_checkpoint(
            osp.join(out_dir, LATEST),
            checkpoint_state(model, cfg, step, state),
        )
    return TrainResult(step, state, losses, smoothed)


def resume(path: str) -> Tuple[GRAN, Checkpoint, AdamState]:
    """Model, checkpoint and Adam state saved by `train_loop`."""
    model, ckpt = load(path)
    shapes = {name: param.shape for name, param in model.named_parameters()}
    state = AdamState(ckpt.adam_step)
    if ckpt.adam_step:
        state.m = restore_weights(shapes, ckpt.moments("adam.m."), path)
        state.v = restore_weights(shapes, ckpt.moments("adam.v."), path)
    logger.info("Resuming %s at step %d", path, ckpt.step)
    return model, ckpt, state
