"""Tests for tensor primitives."""
import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

# Add src to path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from adaresnet_mini.core import tensor as T
from adaresnet_mini.exceptions import (
    ConfigurationError,
    NumericDivergenceError,
    ShapeError,
    TargetError,
)


def test_matmul_example():
    """Small matrix product matches the hand-computed result."""
    a = T.as_tensor([[1, 2], [3, 4]])
    b = T.as_tensor([[5, 6], [7, 8]])
    assert_array_equal(T.matmul(a, b), [[19, 22], [43, 50]])


def test_matmul_identity_and_zero():
    a = T.rng_for(0).standard_normal((3, 4)).astype(np.float32)
    assert_array_equal(T.matmul(a, np.eye(4, dtype=np.float32)), a)
    assert not T.matmul(a, T.zeros((4, 2))).any()


def test_matmul_associativity():
    rng = T.rng_for(1)
    a, b, c = (rng.standard_normal(s).astype(np.float32) for s in [(4, 5), (5, 6), (6, 3)])
    assert_allclose(T.matmul(T.matmul(a, b), c), T.matmul(a, T.matmul(b, c)), atol=1e-4)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        T.matmul(T.zeros((2, 3)), T.zeros((2, 3)))


def test_as_tensor_defaults_to_float32_and_keeps_float64():
    assert T.as_tensor([1, 2]).dtype == np.float32
    assert T.as_tensor(np.zeros(2, dtype=np.float64)).dtype == np.float64
    assert T.as_tensor(0.5).shape == ()


def test_conv2d_valid_ones():
    """Ones input with a 3x3 ones kernel gives 9 everywhere."""
    x = T.ones((1, 1, 4, 4))
    k = T.ones((1, 1, 3, 3))
    out = T.conv2d(x, k, stride=1, padding="valid")
    assert out.shape == (1, 1, 2, 2)
    assert_array_equal(out, np.full((1, 1, 2, 2), 9.0))


def test_conv2d_unit_kernel_is_identity():
    x = T.rng_for(2).standard_normal((2, 3, 5, 5)).astype(np.float32)
    k = np.eye(3, dtype=np.float32)[:, :, None, None]
    assert_array_equal(T.conv2d(x, k, padding="same"), x)


def test_conv2d_delta_kernel_is_identity():
    x = T.rng_for(3).standard_normal((1, 1, 6, 6)).astype(np.float32)
    k = T.zeros((1, 1, 3, 3))
    k[0, 0, 1, 1] = 1.0
    assert_allclose(T.conv2d(x, k, padding="same"), x)


def test_conv2d_zero_kernel():
    x = T.ones((1, 2, 4, 4))
    assert not T.conv2d(x, T.zeros((3, 2, 3, 3))).any()


@pytest.mark.parametrize("stride,padding", [(1, "same"), (2, "same"), (1, "valid"), (2, "valid")])
def test_conv2d_im2col_matches_direct(stride, padding):
    """The strided-window path agrees with per-offset accumulation."""
    rng = T.rng_for(4)
    x = rng.standard_normal((2, 3, 7, 7)).astype(np.float32)
    k = rng.standard_normal((4, 3, 3, 3)).astype(np.float32)
    fast = T.conv2d(x, k, stride=stride, padding=padding, method="im2col")
    direct = T.conv2d(x, k, stride=stride, padding=padding, method="direct")
    assert fast.shape == direct.shape
    assert_allclose(fast, direct, atol=1e-5)


def test_conv2d_output_sizes():
    x = T.ones((1, 1, 7, 7))
    assert T.conv2d(x, T.ones((1, 1, 3, 3)), stride=2, padding="same").shape == (1, 1, 4, 4)
    assert T.conv2d(x, T.ones((1, 1, 3, 3)), stride=2, padding="valid").shape == (1, 1, 3, 3)


def test_same_padding_puts_extra_pixel_after():
    assert T.same_padding(4, 3, 2) == (0, 1)
    assert T.same_padding(5, 3, 1) == (1, 1)
    assert T.same_padding(28, 1, 2) == (0, 0)


def test_conv2d_errors():
    with pytest.raises(ShapeError, match="channels"):
        T.conv2d(T.ones((1, 2, 4, 4)), T.ones((1, 3, 3, 3)))
    with pytest.raises(ConfigurationError, match="stride"):
        T.conv2d(T.ones((1, 1, 4, 4)), T.ones((1, 1, 3, 3)), stride=0)
    with pytest.raises(ConfigurationError, match="odd"):
        T.conv2d(T.ones((1, 1, 4, 4)), T.ones((1, 1, 2, 2)), padding="same")


def test_relu():
    assert_array_equal(T.relu(T.as_tensor([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0])


def test_batch_norm_two_values():
    """{2, 4} in one channel normalizes to {-1, 1}."""
    x = T.as_tensor([2.0, 4.0]).reshape(2, 1, 1, 1)
    mean, var = T.zeros(1), T.ones(1)
    out = T.batch_norm(x, T.ones(1), T.zeros(1), mean, var, training=True)
    assert_allclose(out.reshape(-1), [-1.0, 1.0], atol=1e-3)
    # running stats move towards the batch statistics
    assert_allclose(mean, [0.3], rtol=1e-6)
    assert_allclose(var, [1.0], rtol=1e-6)


def test_batch_norm_update_stats_false_leaves_buffers():
    x = T.as_tensor([2.0, 4.0]).reshape(2, 1, 1, 1)
    mean, var = T.zeros(1), T.ones(1)
    T.batch_norm(x, T.ones(1), T.zeros(1), mean, var, training=True, update_stats=False)
    assert_array_equal(mean, [0.0])
    assert_array_equal(var, [1.0])


def test_batch_norm_gamma_zero_gives_beta():
    x = T.rng_for(5).standard_normal((4, 2, 3, 3)).astype(np.float32)
    beta = T.as_tensor([0.5, -1.5])
    out = T.batch_norm(x, T.zeros(2), beta, T.zeros(2), T.ones(2), training=True)
    assert_allclose(out[:, 0], 0.5)
    assert_allclose(out[:, 1], -1.5)


def test_batch_norm_training_output_statistics():
    x = (T.rng_for(6).standard_normal((8, 3, 4, 4)) * 3 + 5).astype(np.float32)
    out = T.batch_norm(x, T.ones(3), T.zeros(3), T.zeros(3), T.ones(3), training=True)
    assert np.all(np.abs(out.mean(axis=(0, 2, 3))) < 1e-4)
    assert_allclose(out.var(axis=(0, 2, 3)), 1.0, atol=1e-3)


def test_batch_norm_inference_uses_running_stats():
    x = T.ones((1, 1, 2, 2)) * 3
    out = T.batch_norm(x, T.ones(1), T.zeros(1), T.as_tensor([1.0]), T.as_tensor([4.0]), training=False)
    assert_allclose(out, 1.0, atol=1e-5)


def test_batch_norm_errors():
    x = T.ones((2, 2, 2, 2))
    with pytest.raises(ShapeError):
        T.batch_norm(x, T.ones(3), T.zeros(3), T.zeros(3), T.ones(3), training=True)
    with pytest.raises(NumericDivergenceError, match="negative"):
        T.batch_norm(x, T.ones(2), T.zeros(2), T.zeros(2), T.as_tensor([1.0, -1.0]), training=False)


def test_global_avg_pool():
    x = T.as_tensor([1.0, 2.0, 3.0, 4.0]).reshape(1, 1, 2, 2)
    assert_allclose(T.global_avg_pool(x), [[2.5]])


def test_cross_entropy_examples():
    """Known cross-entropy values."""
    onehot = np.eye(10, dtype=np.float32)[[3]]
    assert T.softmax_cross_entropy(T.zeros((1, 10)), onehot) == pytest.approx(math.log(10), rel=1e-6)

    logits = T.zeros((1, 10))
    logits[0, 3] = 20.0
    assert T.softmax_cross_entropy(logits, onehot) < 1e-3

    logits = T.as_tensor([[1.0, 2.0, 3.0]], dtype=np.float64)
    target = np.array([[0.0, 0.0, 1.0]])
    assert T.softmax_cross_entropy(logits, target) == pytest.approx(0.40760596, abs=1e-7)


def test_cross_entropy_is_stable_for_large_logits():
    logits = T.as_tensor([[1000.0, 0.0]])
    loss = T.softmax_cross_entropy(logits, np.array([[1.0, 0.0]], dtype=np.float32))
    assert math.isfinite(loss) and loss >= 0


def test_cross_entropy_errors():
    with pytest.raises(ShapeError):
        T.softmax_cross_entropy(T.zeros((2, 3)), np.eye(4, dtype=np.float32)[:2])
    with pytest.raises(TargetError, match="row 1"):
        T.softmax_cross_entropy(T.zeros((2, 3)), np.array([[1, 0, 0], [1, 1, 0]], dtype=np.float32))


def test_softmax_rows_sum_to_one():
    probs = T.softmax(T.rng_for(7).standard_normal((4, 5)))
    assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-6)


def test_accuracy():
    logits = T.as_tensor([[0.1, 0.9], [0.8, 0.2], [0.3, 0.7]])
    assert T.accuracy(logits, np.array([1, 0, 0])) == pytest.approx(2 / 3)
    assert T.accuracy(T.zeros((0, 2)), np.array([], dtype=np.int64)) == 0.0


def test_debug_numerics_rejects_nan(monkeypatch):
    """Debug numerics validates primitive outputs."""
    x = T.as_tensor([np.nan, 1.0])
    monkeypatch.delenv("ADARESNET_DEBUG_NUMERICS", raising=False)
    T.relu(x)
    monkeypatch.setenv("ADARESNET_DEBUG_NUMERICS", "1")
    with pytest.raises(NumericDivergenceError, match="relu"):
        T.relu(x)


def test_rng_for_is_deterministic():
    assert_array_equal(T.rng_for(3, 1).random(5), T.rng_for(3, 1).random(5))
    assert not np.array_equal(T.rng_for(3, 1).random(5), T.rng_for(3, 2).random(5))


def test_he_uniform_bounds():
    w = T.he_uniform(T.rng_for(0), (1000,), fan_in=6)
    assert w.dtype == np.float32
    assert np.all(np.abs(w) <= 1.0)
