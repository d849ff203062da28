"""Single-layer LSTM with full backpropagation through time.

Gate order in all stacked kernels/biases is (i, f, g, o) with activations
(sigmoid, sigmoid, tanh, sigmoid). Initial hidden and cell states are zero.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(x, kernel, recurrent, bias):
    """Run the recurrence over a batch of sequences.

    x: (B, T, F); kernel: (F, 4H); recurrent: (H, 4H); bias: (4H,).
    Returns (hidden states (B, T, H), cache for lstm_backward).
    """
    if x.ndim != 3:
        raise ShapeMismatch("lstm expects (B, T, F) input")
    b, t, f = x.shape
    if kernel.shape[0] != f or kernel.shape != (f, recurrent.shape[1]):
        raise ShapeMismatch("lstm kernel shape disagrees with input features")
    h4 = kernel.shape[1]
    if h4 % 4 or recurrent.shape != (h4 // 4, h4) or bias.shape != (h4,):
        raise ShapeMismatch("lstm recurrent/bias shapes disagree")
    h = h4 // 4
    dtype = x.dtype
    hs = np.zeros((b, t, h), dtype=dtype)
    cs = np.zeros((b, t, h), dtype=dtype)
    gates = np.zeros((b, t, h4), dtype=dtype)
    h_prev = np.zeros((b, h), dtype=dtype)
    c_prev = np.zeros((b, h), dtype=dtype)
    for step in range(t):
        z = x[:, step] @ kernel + h_prev @ recurrent + bias
        i = sigmoid(z[:, :h])
        fg = sigmoid(z[:, h : 2 * h])
        g = np.tanh(z[:, 2 * h : 3 * h])
        o = sigmoid(z[:, 3 * h :])
        c_prev = fg * c_prev + i * g
        h_prev = o * np.tanh(c_prev)
        gates[:, step] = np.concatenate([i, fg, g, o], axis=1)
        cs[:, step] = c_prev
        hs[:, step] = h_prev
    cache = (x, kernel, recurrent, hs, cs, gates)
    return hs, cache


def lstm_backward(cache, grad_hs):
    """BPTT. grad_hs: (B, T, H) upstream gradient on every hidden state
    (zero-filled except the consumed steps). Returns gradients for
    (x, kernel, recurrent, bias)."""
    x, kernel, recurrent, hs, cs, gates = cache
    b, t, f = x.shape
    h = hs.shape[2]
    grad_x = np.zeros_like(x)
    grad_kernel = np.zeros_like(kernel)
    grad_recurrent = np.zeros_like(recurrent)
    grad_bias = np.zeros_like(kernel[0])
    dh_next = np.zeros((b, h), dtype=x.dtype)
    dc_next = np.zeros((b, h), dtype=x.dtype)
    for step in range(t - 1, -1, -1):
        i = gates[:, step, :h]
        fg = gates[:, step, h : 2 * h]
        g = gates[:, step, 2 * h : 3 * h]
        o = gates[:, step, 3 * h :]
        c = cs[:, step]
        c_prev = cs[:, step - 1] if step > 0 else np.zeros_like(c)
        h_prev = hs[:, step - 1] if step > 0 else np.zeros_like(c)
        tanh_c = np.tanh(c)
        dh = grad_hs[:, step] + dh_next
        dc = dh * o * (1.0 - tanh_c**2) + dc_next
        di = dc * g * i * (1.0 - i)
        df = dc * c_prev * fg * (1.0 - fg)
        dg = dc * i * (1.0 - g**2)
        do = dh * tanh_c * o * (1.0 - o)
        dz = np.concatenate([di, df, dg, do], axis=1)
        grad_x[:, step] = dz @ kernel.T
        grad_kernel += x[:, step].T @ dz
        grad_recurrent += h_prev.T @ dz
        grad_bias += dz.sum(axis=0)
        dh_next = dz @ recurrent.T
        dc_next = dc * fg
    return grad_x, grad_kernel, grad_recurrent, grad_bias
