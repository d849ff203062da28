import numpy as np
import pytest

from liplink.errors import BadK, ShapeMismatch
from liplink.nn import ModelSpec, forward, gradient_check, init_weights, predict_topk
from liplink.nn import layers
from liplink.nn.gradcheck import analytic_gradients

TINY = ModelSpec(
    input_side=8,
    sequence_length=2,
    conv_blocks=(2, 3),
    lstm_hidden=4,
    dense_units=8,
    num_classes=3,
)


def tiny_weights(seed=0, dtype=np.float64):
    return init_weights(TINY, np.random.default_rng(seed), dtype=dtype)


def test_all_zero_weights_give_uniform_probabilities():
    w = tiny_weights()
    for name in w.tensors:
        w.tensors[name][...] = 0.0
    x = np.random.default_rng(0).random((2, 8, 8))
    logits = forward(w, x)
    assert np.allclose(logits, logits[0])
    probs = layers.softmax(logits)
    assert np.allclose(probs, 1 / 3)


def test_batch_independence():
    rng = np.random.default_rng(1)
    w = tiny_weights(1)
    a = rng.random((1, 2, 8, 8))
    batch = np.concatenate([a, rng.random((3, 2, 8, 8))], axis=0)
    assert np.allclose(forward(w, a)[0], forward(w, batch)[0])


def test_shape_mismatch():
    w = tiny_weights()
    with pytest.raises(ShapeMismatch):
        forward(w, np.zeros((2, 9, 9)))


def test_full_model_gradient_check():
    rng = np.random.default_rng(2)
    sample = rng.random((2, 8, 8))
    err = gradient_check(TINY, sample, label=1, epsilon=1e-5)
    assert err < 1e-4


def test_gradient_check_near_zero_loss():
    # force probability ~1 at the label via a huge output bias
    w = tiny_weights(3)
    w.tensors["output.bias"][0] = 50.0
    x = np.random.default_rng(3).random((2, 8, 8))
    grads = analytic_gradients(w, x, 0)
    logits = forward(w, x)
    loss, _, _ = layers.softmax_cross_entropy(logits, [0])
    assert loss < 1e-6
    assert max(np.abs(g).max() for g in grads.values()) < 1e-6


def test_gradient_check_detects_corrupted_backward():
    # off-by-transpose mutation in the dense backward path
    def corrupted(weights, x, label):
        grads = analytic_gradients(weights, x, label)
        grads["dense.kernel"] = grads["dense.kernel"].T.reshape(
            grads["dense.kernel"].shape
        )
        return grads

    rng = np.random.default_rng(4)
    sample = rng.random((2, 8, 8))
    err = gradient_check(TINY, sample, label=2, backward_fn=corrupted)
    assert err > 1e-2


class TestPredictTopk:
    def test_uniform_ties_broken_by_class_id(self):
        w = tiny_weights()
        for name in w.tensors:
            w.tensors[name][...] = 0.0
        x = np.zeros((2, 8, 8))
        ranked = predict_topk(w, x, 3)
        assert [c for c, _ in ranked] == [0, 1, 2]
        assert all(p == pytest.approx(1 / 3) for _, p in ranked)

    def test_sorted_descending(self):
        w = tiny_weights(5)
        x = np.random.default_rng(5).random((2, 8, 8))
        ranked = predict_topk(w, x, 3)
        probs = [p for _, p in ranked]
        assert probs == sorted(probs, reverse=True)
        assert sum(probs) == pytest.approx(1.0, abs=1e-6)

    def test_topk_prefix_property(self):
        w = tiny_weights(6)
        x = np.random.default_rng(6).random((2, 8, 8))
        prev = set()
        for k in range(1, 4):
            cur = {c for c, _ in predict_topk(w, x, k)}
            assert prev <= cur
            prev = cur

    def test_bad_k(self):
        w = tiny_weights()
        with pytest.raises(BadK):
            predict_topk(w, np.zeros((2, 8, 8)), 4)
        with pytest.raises(BadK):
            predict_topk(w, np.zeros((2, 8, 8)), 0)


def test_sorted_softmax_hand_example():
    # logits [1, 3, 2], k=2 -> classes 1 then 2
    w = tiny_weights()
    for name in w.tensors:
        w.tensors[name][...] = 0.0
    w.tensors["output.bias"][:] = [1.0, 3.0, 2.0]
    ranked = predict_topk(w, np.zeros((2, 8, 8)), 2)
    assert [c for c, _ in ranked] == [1, 2]
    assert ranked[0][1] > ranked[1][1]
