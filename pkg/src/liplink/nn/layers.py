"""Primitive layers with exact analytic gradients.

All functions take a leading batch dimension. Convolution is 3x3, stride 1,
zero padding 1 (same-size output); pooling is non-overlapping 2x2 max.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import LabelOutOfRange, OddDimension, ShapeMismatch


def _windows3(x):
    # x: (B, C, H, W) -> zero-padded 3x3 windows (B, C, H, W, 3, 3)
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    return sliding_window_view(xp, (3, 3), axis=(2, 3))


def conv2d_forward(x, kernel, bias):
    """3x3 same-padding cross-correlation. x: (B, C_in, H, W),
    kernel: (C_out, C_in, 3, 3), bias: (C_out,)."""
    if x.ndim != 4 or kernel.ndim != 4 or kernel.shape[2:] != (3, 3):
        raise ShapeMismatch("conv2d expects (B,C,H,W) input and (O,C,3,3) kernel")
    if x.shape[1] != kernel.shape[1] or bias.shape != (kernel.shape[0],):
        raise ShapeMismatch("conv2d channel counts disagree")
    win = _windows3(x)
    out = np.einsum("bchwij,ocij->bohw", win, kernel, optimize=True)
    return out + bias[None, :, None, None]


def conv2d_backward(x, kernel, grad_out):
    """Gradients of conv2d_forward w.r.t. input, kernel and bias."""
    if grad_out.shape != (x.shape[0], kernel.shape[0], x.shape[2], x.shape[3]):
        raise ShapeMismatch("conv2d grad shape disagrees with forward output")
    win = _windows3(x)
    grad_kernel = np.einsum("bchwij,bohw->ocij", win, grad_out, optimize=True)
    grad_bias = grad_out.sum(axis=(0, 2, 3))
    # dx is a same-padding correlation of grad_out with the flipped kernel,
    # with in/out channels swapped.
    k_flip = kernel[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    gwin = _windows3(grad_out)
    grad_x = np.einsum("bohwij,coij->bchw", gwin, k_flip, optimize=True)
    return grad_x, grad_kernel, grad_bias


def maxpool2_forward(x):
    """2x2 max pooling. Returns (pooled, argmax) where argmax records the
    in-block winner index (0..3, first-scanned wins ties) for backward."""
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise OddDimension(f"maxpool2 needs even spatial dims, got {h}x{w}")
    blocks = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = blocks.reshape(b, c, h // 2, w // 2, 4)
    arg = flat.argmax(axis=-1)
    pooled = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    return pooled, arg


def maxpool2_backward(x_shape, arg, grad_out):
    """Route gradient to the recorded argmax of each 2x2 block."""
    b, c, h, w = x_shape
    flat = np.zeros((b, c, h // 2, w // 2, 4), dtype=grad_out.dtype)
    np.put_along_axis(flat, arg[..., None], grad_out[..., None], axis=-1)
    blocks = flat.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return blocks.reshape(b, c, h, w)


def relu(x):
    return np.maximum(x, 0)


def relu_backward(x, grad_out):
    # gradient at exactly 0 is 0 (subgradient convention)
    return np.where(x > 0, grad_out, 0)


def dense_forward(x, kernel, bias):
    """Affine map. x: (B, F), kernel: (F, O), bias: (O,)."""
    if x.shape[1] != kernel.shape[0] or bias.shape != (kernel.shape[1],):
        raise ShapeMismatch(
            f"dense shapes disagree: {x.shape} @ {kernel.shape} + {bias.shape}"
        )
    return x @ kernel + bias


def dense_backward(x, kernel, grad_out):
    grad_x = grad_out @ kernel.T
    grad_kernel = x.T @ grad_out
    grad_bias = grad_out.sum(axis=0)
    return grad_x, grad_kernel, grad_bias


def dropout(x, rate, train: bool, rng: np.random.Generator | None = None):
    """Inverted dropout. Inference mode is the identity. Returns (out, mask);
    mask is None outside training or at rate 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not train or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an RNG")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype)
    scale = 1.0 / (1.0 - rate)
    return x * keep * scale, keep * scale


def dropout_backward(mask, grad_out):
    if mask is None:
        return grad_out
    return grad_out * mask


def softmax(logits):
    """Row-wise max-subtracted stable softmax."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch.

    logits: (B, K); labels: (B,) int class ids.
    Returns (loss, probabilities, logit gradients of the mean loss).
    """
    logits = np.atleast_2d(logits)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    b, k = logits.shape
    if labels.shape != (b,):
        raise ShapeMismatch("one label per logit row required")
    if (labels < 0).any() or (labels >= k).any():
        raise LabelOutOfRange(f"labels must lie in [0, {k})")
    probs = softmax(logits)
    picked = np.clip(probs[np.arange(b), labels], 1e-300, None)
    loss = float(-np.log(picked).mean())
    grad = probs.copy()
    grad[np.arange(b), labels] -= 1.0
    grad /= b
    return loss, probs, grad
