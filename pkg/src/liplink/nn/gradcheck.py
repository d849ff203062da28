"""Finite-difference verification of the analytic gradients."""

from __future__ import annotations

import numpy as np

from . import layers
from .model import ModelSpec, ModelWeights, backward, forward, init_weights


def _loss(weights: ModelWeights, x, label):
    logits = forward(weights, x[None], train=False)
    loss, _, _ = layers.softmax_cross_entropy(logits, [label])
    return loss


def analytic_gradients(weights: ModelWeights, x, label):
    logits, cache = forward(weights, x[None], train=False, return_cache=True)
    _, _, grad_logits = layers.softmax_cross_entropy(logits, [label])
    return backward(weights, cache, grad_logits)


def gradient_check(
    spec: ModelSpec,
    sample,
    label: int,
    epsilon: float = 1e-5,
    seed: int = 0,
    backward_fn=None,
) -> float:
    """Max relative error between analytic and central-difference gradients
    over every parameter of the model. Runs in float64 with dropout off.
    `backward_fn` may substitute the gradient computation (mutation tests)."""
    spec64 = ModelSpec(**{**spec.to_dict(), "dropout_rate": 0.0})
    rng = np.random.default_rng(seed)
    weights = init_weights(spec64, rng, dtype=np.float64)
    x = np.asarray(sample, dtype=np.float64)

    if backward_fn is None:
        grads = analytic_gradients(weights, x, label)
    else:
        grads = backward_fn(weights, x, label)

    worst = 0.0
    for name, w in weights.tensors.items():
        flat = w.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = _loss(weights, x, label)
            flat[i] = orig - epsilon
            down = _loss(weights, x, label)
            flat[i] = orig
            numeric = (up - down) / (2 * epsilon)
            denom = max(abs(gflat[i]), abs(numeric), 1e-12)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst
