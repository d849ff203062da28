"""Mini-batch training loop with early stopping and checkpoint restore."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from ..errors import EmptySplit, LabelOutOfRange
from . import layers
from .adam import AdamState, adam_step
from .model import ModelSpec, ModelWeights, backward, forward, init_weights


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 8
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("betas must be in [0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_top1: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _epoch_eval(weights: ModelWeights, x, y):
    logits = forward(weights, x, train=False)
    loss, probs, _ = layers.softmax_cross_entropy(logits, y)
    top1 = float((probs.argmax(axis=1) == y).mean())
    return loss, top1


def train(
    model_spec: ModelSpec,
    train_x,
    train_y,
    val_x,
    val_y,
    config: TrainConfig,
    val_loss_override: Sequence[float] | None = None,
) -> tuple[ModelWeights, TrainHistory]:
    """Train with ADAM on mean cross-entropy; stop after `patience` epochs
    without a new best validation loss; return the best epoch's weights.

    Deterministic given config.seed: init, shuffling and dropout masks all
    come from the same seeded generator. `val_loss_override`, when given,
    replaces the computed per-epoch validation loss (test seam for the
    stopping rule); training and checkpointing proceed unchanged.
    """
    train_x = np.asarray(train_x)
    train_y = np.asarray(train_y, dtype=np.int64)
    val_x = np.asarray(val_x)
    val_y = np.asarray(val_y, dtype=np.int64)
    if len(train_x) == 0 or len(val_x) == 0:
        raise EmptySplit("train and validation sets must be nonempty")
    for y in (train_y, val_y):
        if (y < 0).any() or (y >= model_spec.num_classes).any():
            raise LabelOutOfRange("labels must be < num_classes")

    rng = np.random.default_rng(config.seed)
    weights = init_weights(model_spec, rng)
    state = AdamState(weights.tensors)
    history = TrainHistory()

    best_loss = np.inf
    best_weights = weights.copy()
    best_epoch = 0
    since_best = 0
    step = 0
    n = len(train_x)

    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            logits, cache = forward(
                weights, train_x[idx], train=True, rng=rng, return_cache=True
            )
            loss, _, grad_logits = layers.softmax_cross_entropy(logits, train_y[idx])
            grads = backward(weights, cache, grad_logits)
            step += 1
            adam_step(
                weights.tensors,
                grads,
                state,
                step,
                config.learning_rate,
                config.adam_beta1,
                config.adam_beta2,
                config.adam_epsilon,
            )
            epoch_losses.append(loss)

        val_loss, val_top1 = _epoch_eval(weights, val_x, val_y)
        if val_loss_override is not None:
            val_loss = float(val_loss_override[epoch])
        history.train_loss.append(float(np.mean(epoch_losses)))
        history.val_loss.append(val_loss)
        history.val_top1.append(val_top1)
        history.stopped_epoch = epoch

        if val_loss < best_loss:
            best_loss = val_loss
            best_weights = weights.copy()
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    history.best_epoch = best_epoch
    return best_weights, history
