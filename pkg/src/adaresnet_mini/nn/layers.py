"""Parameterized layers built on the autograd ops."""

from typing import Dict, List

import numpy as np

from ..core import autograd as ag
from ..core import tensor as T


class Conv2d:
    """Bias-free convolution (always followed by batch normalization)."""

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int,
        rng: np.random.Generator,
        dtype=None,
    ):
        self.stride = stride
        fan_in = in_channels * kernel_size * kernel_size
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        self.kernel = ag.Parameter(f"{name}.kernel", T.he_uniform(rng, shape, fan_in, dtype))

    def __call__(self, x: ag.NodeLike) -> ag.Node:
        return ag.conv2d(x, self.kernel, stride=self.stride, padding="same")

    def parameters(self) -> List[ag.Parameter]:
        return [self.kernel]


class BatchNorm2d:
    """Per-channel batch normalization with running statistics."""

    def __init__(self, name: str, channels: int, dtype=None):
        self.name = name
        self.gamma = ag.Parameter(f"{name}.gamma", T.ones(channels, dtype))
        self.beta = ag.Parameter(f"{name}.beta", T.zeros(channels, dtype))
        self.running_mean = T.zeros(channels, dtype)
        self.running_var = T.ones(channels, dtype)

    def __call__(self, x: ag.NodeLike, training: bool, update_stats: bool = True) -> ag.Node:
        return ag.batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            training, update_stats=update_stats,
        )

    def parameters(self) -> List[ag.Parameter]:
        return [self.gamma, self.beta]

    def buffers(self) -> Dict[str, np.ndarray]:
        return {
            f"{self.name}.running_mean": self.running_mean,
            f"{self.name}.running_var": self.running_var,
        }


class Dense:
    """Fully connected layer, x[N×in] @ weight[in×out] + bias."""

    def __init__(self, name: str, in_features: int, out_features: int, rng: np.random.Generator, dtype=None):
        self.weight = ag.Parameter(
            f"{name}.weight",
            T.he_uniform(rng, (in_features, out_features), in_features, dtype),
        )
        self.bias = ag.Parameter(f"{name}.bias", T.zeros(out_features, dtype))

    def __call__(self, x: ag.NodeLike) -> ag.Node:
        return ag.add_bias(ag.matmul(x, self.weight), self.bias)

    def parameters(self) -> List[ag.Parameter]:
        return [self.weight, self.bias]
