"""CNN -> LSTM -> dense phrase classifier: spec, weights, forward/backward."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import BadK, ShapeMismatch
from . import layers
from .lstm import lstm_backward, lstm_forward


@dataclass
class ModelSpec:
    """Declarative architecture: per-frame conv feature extractor (3x3 conv,
    relu, 2x2 max pool per block), LSTM over the frame features, dropout on
    the final hidden state, a dense+relu layer, and a K-way output layer."""

    input_side: int = 32
    sequence_length: int = 25
    conv_blocks: tuple[int, ...] = (8, 16)
    lstm_hidden: int = 64
    dropout_rate: float = 0.10
    dense_units: int = 128
    num_classes: int = 2

    def __post_init__(self):
        self.conv_blocks = tuple(int(c) for c in self.conv_blocks)
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.lstm_hidden < 1 or self.dense_units < 1:
            raise ValueError("layer sizes must be positive")
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        side = self.input_side
        for _ in self.conv_blocks:
            if side < 2 or side % 2:
                raise ValueError(
                    f"input_side {self.input_side} does not survive "
                    f"{len(self.conv_blocks)} pooling stages"
                )
            side //= 2

    @property
    def feature_side(self) -> int:
        return self.input_side // (2 ** len(self.conv_blocks))

    @property
    def feature_dim(self) -> int:
        channels = self.conv_blocks[-1] if self.conv_blocks else 1
        return channels * self.feature_side**2

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        """Canonical tensor names and shapes, in serialization order."""
        shapes: dict[str, tuple[int, ...]] = {}
        c_in = 1
        for i, c_out in enumerate(self.conv_blocks):
            shapes[f"conv{i}.kernel"] = (c_out, c_in, 3, 3)
            shapes[f"conv{i}.bias"] = (c_out,)
            c_in = c_out
        h = self.lstm_hidden
        shapes["lstm.kernel"] = (self.feature_dim, 4 * h)
        shapes["lstm.recurrent"] = (h, 4 * h)
        shapes["lstm.bias"] = (4 * h,)
        shapes["dense.kernel"] = (h, self.dense_units)
        shapes["dense.bias"] = (self.dense_units,)
        shapes["output.kernel"] = (self.dense_units, self.num_classes)
        shapes["output.bias"] = (self.num_classes,)
        return shapes

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv_blocks"] = list(self.conv_blocks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**{k: (tuple(v) if k == "conv_blocks" else v) for k, v in d.items()})


@dataclass
class ModelWeights:
    spec: ModelSpec
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        expected = self.spec.tensor_shapes()
        if set(self.tensors) != set(expected):
            raise ShapeMismatch(
                f"tensor names {sorted(self.tensors)} do not match spec"
            )
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ShapeMismatch(
                    f"{name}: expected shape {shape}, got {self.tensors[name].shape}"
                )

    def copy(self) -> "ModelWeights":
        return ModelWeights(self.spec, {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype) -> "ModelWeights":
        return ModelWeights(
            self.spec, {k: v.astype(dtype) for k, v in self.tensors.items()}
        )


def init_weights(spec: ModelSpec, rng: np.random.Generator, dtype=np.float32) -> ModelWeights:
    """Uniform(-s, s) init with s = 1/sqrt(fan_in) per kernel; biases zero
    except the LSTM forget gate, which starts at 1.0."""
    fan_in = {}
    c_in = 1
    for i, _ in enumerate(spec.conv_blocks):
        fan_in[f"conv{i}.kernel"] = c_in * 9
        c_in = spec.conv_blocks[i]
    fan_in["lstm.kernel"] = spec.feature_dim
    fan_in["lstm.recurrent"] = spec.lstm_hidden
    fan_in["dense.kernel"] = spec.lstm_hidden
    fan_in["output.kernel"] = spec.dense_units

    tensors = {}
    for name, shape in spec.tensor_shapes().items():
        if name.endswith(".bias"):
            t = np.zeros(shape, dtype=dtype)
            if name == "lstm.bias":
                h = spec.lstm_hidden
                t[h : 2 * h] = 1.0  # forget-gate stabilizer
        else:
            s = 1.0 / np.sqrt(fan_in[name])
            t = rng.uniform(-s, s, size=shape).astype(dtype)
        tensors[name] = t
    return ModelWeights(spec, tensors)


def _conv_stack_forward(w: ModelWeights, frames):
    """frames: (B*T, 1, N, N) -> (B*T, C, n, n) plus per-block caches."""
    caches = []
    x = frames
    for i in range(len(w.spec.conv_blocks)):
        pre = layers.conv2d_forward(x, w.tensors[f"conv{i}.kernel"], w.tensors[f"conv{i}.bias"])
        act = layers.relu(pre)
        pooled, arg = layers.maxpool2_forward(act)
        caches.append((x, pre, act.shape, arg))
        x = pooled
    return x, caches


def _conv_stack_backward(w: ModelWeights, caches, grad):
    grads = {}
    for i in range(len(w.spec.conv_blocks) - 1, -1, -1):
        x, pre, act_shape, arg = caches[i]
        grad = layers.maxpool2_backward(act_shape, arg, grad)
        grad = layers.relu_backward(pre, grad)
        grad, gk, gb = layers.conv2d_backward(x, w.tensors[f"conv{i}.kernel"], grad)
        grads[f"conv{i}.kernel"] = gk
        grads[f"conv{i}.bias"] = gb
    return grads, grad


def forward(
    weights: ModelWeights,
    x,
    train: bool = False,
    rng: np.random.Generator | None = None,
    return_cache: bool = False,
):
    """Compute logits for a batch (B, T, N, N) or one sample (T, N, N)."""
    spec = weights.spec
    x = np.asarray(x)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.shape[1:] != (spec.sequence_length, spec.input_side, spec.input_side):
        raise ShapeMismatch(
            f"expected input (B, {spec.sequence_length}, {spec.input_side}, "
            f"{spec.input_side}), got {x.shape}"
        )
    dtype = weights.tensors["output.bias"].dtype
    x = x.astype(dtype)
    b, t, n, _ = x.shape

    frames = x.reshape(b * t, 1, n, n)
    feat_maps, conv_caches = _conv_stack_forward(weights, frames)
    feats = feat_maps.reshape(b, t, spec.feature_dim)

    hs, lstm_cache = lstm_forward(
        feats,
        weights.tensors["lstm.kernel"],
        weights.tensors["lstm.recurrent"],
        weights.tensors["lstm.bias"],
    )
    h_last = hs[:, -1]
    dropped, drop_mask = layers.dropout(h_last, spec.dropout_rate, train, rng)
    dense_pre = layers.dense_forward(
        dropped, weights.tensors["dense.kernel"], weights.tensors["dense.bias"]
    )
    dense_act = layers.relu(dense_pre)
    logits = layers.dense_forward(
        dense_act, weights.tensors["output.kernel"], weights.tensors["output.bias"]
    )
    if not return_cache:
        return logits[0] if single else logits
    cache = {
        "feat_maps_shape": feat_maps.shape,
        "conv_caches": conv_caches,
        "lstm_cache": lstm_cache,
        "hs_shape": hs.shape,
        "drop_mask": drop_mask,
        "dropped": dropped,
        "dense_pre": dense_pre,
        "dense_act": dense_act,
    }
    return logits, cache


def backward(weights: ModelWeights, cache, grad_logits) -> dict[str, np.ndarray]:
    """Gradients of the loss w.r.t. every named tensor."""
    grads = {}
    grad, gk, gb = layers.dense_backward(
        cache["dense_act"], weights.tensors["output.kernel"], grad_logits
    )
    grads["output.kernel"] = gk
    grads["output.bias"] = gb
    grad = layers.relu_backward(cache["dense_pre"], grad)
    grad, gk, gb = layers.dense_backward(
        cache["dropped"], weights.tensors["dense.kernel"], grad
    )
    grads["dense.kernel"] = gk
    grads["dense.bias"] = gb
    grad = layers.dropout_backward(cache["drop_mask"], grad)

    grad_hs = np.zeros(cache["hs_shape"], dtype=grad.dtype)
    grad_hs[:, -1] = grad
    grad_feats, gk, gr, gb = lstm_backward(cache["lstm_cache"], grad_hs)
    grads["lstm.kernel"] = gk
    grads["lstm.recurrent"] = gr
    grads["lstm.bias"] = gb

    grad_maps = grad_feats.reshape(cache["feat_maps_shape"])
    conv_grads, _ = _conv_stack_backward(weights, cache["conv_caches"], grad_maps)
    grads.update(conv_grads)
    return grads


def predict_topk(weights: ModelWeights, x, k: int):
    """Ranked (class id, probability) candidates, ties broken by class id."""
    spec = weights.spec
    if not 1 <= k <= spec.num_classes:
        raise BadK(f"k must be in [1, {spec.num_classes}], got {k}")
    logits = forward(weights, x, train=False)
    logits = np.atleast_2d(logits)
    probs = layers.softmax(logits.astype(np.float64))
    results = []
    for row in probs:
        order = np.argsort(-row, kind="stable")[:k]
        results.append([(int(c), float(row[c])) for c in order])
    return results[0] if np.asarray(x).ndim == 3 else results
