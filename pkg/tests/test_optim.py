"""Tests for SGD and Adam."""
import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_array_equal

# Add src to path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from adaresnet_mini.core.autograd import Parameter
from adaresnet_mini.exceptions import ConfigurationError, NumericDivergenceError, OptimizerError
from adaresnet_mini.optim import SGD, Adam, OptimizerState, adam_step, build_optimizer, sgd_step


def _scalar_adam(grads, w, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
    """Reference Adam on plain Python floats."""
    m = v = 0.0
    trajectory = []
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        w = w - lr * m_hat / (math.sqrt(v_hat) + eps)
        trajectory.append(w)
    return trajectory


def test_sgd_exact_step():
    """w <- w - lr * g."""
    w = Parameter("w", np.array([1.0, 2.0]))
    sgd_step([w], {"w": np.array([0.5, -1.0])}, lr=0.1)
    assert_array_equal(w.value, [1.0 - 0.1 * 0.5, 2.0 + 0.1 * 1.0])


def test_sgd_class_skips_frozen_parameters():
    w = Parameter("w", np.array([1.0]))
    frozen = Parameter("frozen", np.array([3.0]), trainable=False)
    SGD([w, frozen], lr=0.5).step({"w": np.array([2.0])})
    assert_array_equal(w.value, [0.0])
    assert_array_equal(frozen.value, [3.0])


def test_adam_three_unit_steps():
    w = Parameter("w", np.array(1.0))
    opt = Adam([w], lr=0.001)
    for _ in range(3):
        opt.step({"w": np.array(1.0)})
    assert float(w.value) == pytest.approx(_scalar_adam([1.0, 1.0, 1.0], 1.0)[-1], abs=1e-9)
    assert float(w.value) == pytest.approx(1.0 - 3 * 0.001, abs=1e-7)


def test_adam_matches_scalar_reference_over_100_steps():
    """Float64 Adam follows the scalar reference trajectory to 1e-9."""
    grads = [math.sin(0.3 * t) + 0.1 * t % 1.7 for t in range(1, 101)]
    expected = _scalar_adam(grads, 0.5, lr=0.01)
    w = Parameter("w", np.array(0.5))
    state = OptimizerState(lr=0.01)
    for g, want in zip(grads, expected):
        adam_step([w], {"w": np.array(g)}, state)
        assert float(w.value) == pytest.approx(want, abs=1e-9)
    assert state.t == 100


def test_adam_keeps_float32():
    w = Parameter("w", np.zeros(3, dtype=np.float32))
    Adam([w]).step({"w": np.ones(3, dtype=np.float64)})
    assert w.value.dtype == np.float32


def test_adam_state_only_tracks_trainable():
    w = Parameter("w", 1.0)
    frozen = Parameter("frozen", 1.0, trainable=False)
    opt = Adam([w, frozen])
    opt.step({"w": np.array(1.0, dtype=np.float32)})
    assert set(opt.state.m) == {"w"}
    assert set(opt.state.v) == {"w"}


def test_missing_gradient():
    w = Parameter("w", 1.0)
    with pytest.raises(OptimizerError, match="'w'"):
        sgd_step([w], {}, lr=0.1)
    with pytest.raises(OptimizerError):
        adam_step([w], {"w": None}, OptimizerState())


def test_gradient_shape_mismatch():
    w = Parameter("w", [1.0, 2.0])
    with pytest.raises(OptimizerError, match="shape"):
        sgd_step([w], {"w": np.zeros(3)}, lr=0.1)


def test_non_finite_gradient_updates_nothing():
    """Validation happens before any parameter moves."""
    a = Parameter("a", np.array([1.0]))
    b = Parameter("b", np.array([1.0]))
    grads = {"a": np.array([1.0]), "b": np.array([np.inf])}
    with pytest.raises(NumericDivergenceError, match="'b'"):
        sgd_step([a, b], grads, lr=0.1)
    assert_array_equal(a.value, [1.0])
    state = OptimizerState()
    with pytest.raises(NumericDivergenceError):
        adam_step([a, b], grads, state)
    assert_array_equal(a.value, [1.0])
    assert state.t == 0


def test_build_optimizer():
    params = [Parameter("w", 1.0)]
    assert isinstance(build_optimizer("adam", params, 0.01), Adam)
    assert isinstance(build_optimizer(" SGD ", params, 0.01), SGD)
    assert build_optimizer("adam", params, 0.01).lr == 0.01
    with pytest.raises(ConfigurationError, match="Unknown optimizer"):
        build_optimizer("rmsprop", params)
    with pytest.raises(ConfigurationError, match="positive"):
        build_optimizer("sgd", params, 0.0)
