"""ADAM optimizer with bias correction, operating on named tensor dicts."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


class AdamState:
    """First/second moment accumulators, one pair per named tensor."""

    def __init__(self, tensors: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in tensors.items()}


def adam_step(
    tensors: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    t: int,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> None:
    """One in-place update: w <- w - lr * m_hat / (sqrt(v_hat) + eps)."""
    if t < 1:
        raise ValueError("step counter t starts at 1")
    for name, w in tensors.items():
        g = grads[name]
        if g.shape != w.shape:
            raise ShapeMismatch(f"{name}: gradient shape {g.shape} != weight {w.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        w -= learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)
