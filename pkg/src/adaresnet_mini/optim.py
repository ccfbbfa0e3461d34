"""Parameter update rules: plain gradient descent and Adam."""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping

import numpy as np

from .core.autograd import Parameter
from .exceptions import ConfigurationError, NumericDivergenceError, OptimizerError
from .settings import ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, DEFAULT_LEARNING_RATE

OPTIMIZERS = ("sgd", "adam")


@dataclass
class OptimizerState:
    """Adam moments per parameter name, step counter and hyperparameters."""

    lr: float = DEFAULT_LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPSILON
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def _gradient_for(param: Parameter, grads: Mapping[str, np.ndarray]) -> np.ndarray:
    if param.name not in grads or grads[param.name] is None:
        raise OptimizerError(f"No gradient for trainable parameter {param.name!r}")
    grad = np.asarray(grads[param.name])
    if grad.shape != param.value.shape:
        raise OptimizerError(
            f"Gradient for {param.name!r} has shape {grad.shape}, parameter has {param.value.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise NumericDivergenceError(f"Non-finite gradient for parameter {param.name!r}")
    return grad


def sgd_step(params: Iterable[Parameter], grads: Mapping[str, np.ndarray], lr: float) -> None:
    """w <- w - lr * g, in place, for every trainable parameter."""
    trainable = [p for p in params if p.trainable]
    # validate everything before touching any parameter
    checked = [(p, _gradient_for(p, grads)) for p in trainable]
    for param, grad in checked:
        param.value -= param.value.dtype.type(lr) * grad.astype(param.value.dtype, copy=False)


def adam_step(params: Iterable[Parameter], grads: Mapping[str, np.ndarray], state: OptimizerState) -> None:
    """One bias-corrected Adam update in each parameter's dtype.

    Moments are created lazily (zeros) the first time a parameter is seen.
    Non-trainable parameters never enter the state.
    """
    trainable = [p for p in params if p.trainable]
    checked = [(p, _gradient_for(p, grads)) for p in trainable]
    state.t += 1
    t = state.t
    for param, grad in checked:
        dtype = param.value.dtype
        grad = grad.astype(dtype, copy=False)
        m = state.m.setdefault(param.name, np.zeros_like(param.value))
        v = state.v.setdefault(param.name, np.zeros_like(param.value))
        m *= dtype.type(state.beta1)
        m += dtype.type(1.0 - state.beta1) * grad
        v *= dtype.type(state.beta2)
        v += dtype.type(1.0 - state.beta2) * grad * grad
        m_hat = m / dtype.type(1.0 - state.beta1 ** t)
        v_hat = v / dtype.type(1.0 - state.beta2 ** t)
        param.value -= dtype.type(state.lr) * m_hat / (np.sqrt(v_hat) + dtype.type(state.eps))


class SGD:
    """Plain gradient descent over a fixed parameter list."""

    def __init__(self, params: Iterable[Parameter], lr: float = DEFAULT_LEARNING_RATE):
        self.params: List[Parameter] = [p for p in params if p.trainable]
        self.lr = lr

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        sgd_step(self.params, grads, self.lr)


class Adam:
    """Adam with the canonical defaults (no schedule, no weight decay)."""

    def __init__(
        self,
        params: Iterable[Parameter],
        lr: float = DEFAULT_LEARNING_RATE,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        eps: float = ADAM_EPSILON,
    ):
        self.params: List[Parameter] = [p for p in params if p.trainable]
        self.state = OptimizerState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    @property
    def lr(self) -> float:
        return self.state.lr

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        adam_step(self.params, grads, self.state)


def build_optimizer(name: str, params: Iterable[Parameter], lr: float = DEFAULT_LEARNING_RATE):
    """Create an optimizer by name ("sgd" or "adam").

    Raises:
        ConfigurationError: On an unknown name or a non-positive learning rate
    """
    if not math.isfinite(lr) or lr <= 0:
        raise ConfigurationError(f"Learning rate must be positive, got {lr}")
    key = name.strip().lower()
    if key == "sgd":
        return SGD(params, lr)
    if key == "adam":
        return Adam(params, lr)
    raise ConfigurationError(f"Unknown optimizer {name!r}; expected one of {', '.join(OPTIMIZERS)}")
