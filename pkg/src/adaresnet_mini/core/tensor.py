"""Dense tensors and the forward numeric primitives used by residual blocks.

A tensor is a C-contiguous ``numpy.ndarray``. New tensors default to
``settings.DEFAULT_DTYPE`` (float32); primitives keep the dtype of their
inputs, which lets the gradient checker run on a float64 copy of a model.
"""

import math
import os
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import (
    ConfigurationError,
    NumericDivergenceError,
    ShapeError,
    TargetError,
)
from ..settings import (
    BN_EPSILON,
    BN_MOMENTUM,
    DEFAULT_DTYPE,
    ENV_DEBUG_NUMERICS,
    TRUE_VALUES,
)

Tensor = np.ndarray

PADDING_MODES = ("same", "valid")
CONV_METHODS = ("im2col", "direct")


def as_tensor(data, dtype=None) -> Tensor:
    """Convert data to a contiguous floating-point tensor.

    Args:
        data: Array-like input
        dtype: Target dtype. Floating ndarrays keep their dtype when omitted;
            everything else becomes DEFAULT_DTYPE.

    Returns:
        Contiguous ndarray
    """
    if dtype is None:
        if isinstance(data, np.ndarray) and np.issubdtype(data.dtype, np.floating):
            dtype = data.dtype
        else:
            dtype = DEFAULT_DTYPE
    return np.asarray(data, dtype=dtype, order="C")


def debug_numerics() -> bool:
    """Whether primitive outputs are validated for NaN/Inf."""
    return os.environ.get(ENV_DEBUG_NUMERICS, "").strip().lower() in TRUE_VALUES


def check_finite(x: Tensor, op: str) -> Tensor:
    """Raise NumericDivergenceError if x holds NaN or Inf.

    Args:
        x: Tensor to validate
        op: Operation name used in the error message

    Returns:
        x unchanged
    """
    if not np.all(np.isfinite(x)):
        raise NumericDivergenceError(f"Non-finite values produced by {op}")
    return x


def validated(x: Tensor, op: str) -> Tensor:
    """Return x, checking it for NaN/Inf when debug numerics is on."""
    if debug_numerics():
        check_finite(x, op)
    return x


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a[m×k] and b[k×n]."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul: cannot multiply shape {tuple(a.shape)} by shape {tuple(b.shape)}"
        )
    return validated(a @ b, "matmul")


def same_padding(size: int, kernel: int, stride: int) -> Tuple[int, int]:
    """Padding (before, after) so that the output size is ceil(size / stride).

    The extra pixel of an odd total goes after (bottom/right).
    """
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return total // 2, total - total // 2


def conv_output_size(size: int, kernel: int, stride: int, padding: str) -> int:
    """Spatial output size of a convolution along one axis."""
    if padding == "same":
        return math.ceil(size / stride)
    if size < kernel:
        raise ShapeError(f"conv2d: kernel {kernel} larger than input {size} with 'valid' padding")
    return (size - kernel) // stride + 1


def _check_conv_args(x: Tensor, kernel: Tensor, stride: int, padding: str) -> None:
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(
            f"conv2d: expected NCHW input and FCHW kernel, got {tuple(x.shape)} and {tuple(kernel.shape)}"
        )
    if x.shape[1] != kernel.shape[1]:
        raise ShapeError(
            f"conv2d: input channels {x.shape[1]} do not match kernel channels "
            f"{kernel.shape[1]} (input {tuple(x.shape)}, kernel {tuple(kernel.shape)})"
        )
    if not isinstance(stride, (int, np.integer)) or stride < 1:
        raise ConfigurationError(f"conv2d: stride must be a positive int, got {stride!r}")
    if padding not in PADDING_MODES:
        raise ConfigurationError(f"conv2d: unsupported padding {padding!r}")
    if padding == "same" and (kernel.shape[2] % 2 == 0 or kernel.shape[3] % 2 == 0):
        raise ConfigurationError(
            f"conv2d: 'same' padding needs odd kernel sizes, got {kernel.shape[2]}x{kernel.shape[3]}"
        )


def pad_input(
    x: Tensor,
    kh: int,
    kw: int,
    stride: int,
    padding: str,
) -> Tuple[Tensor, Tuple[int, int, int, int], int, int]:
    """Zero-pad an NCHW input for a convolution.

    Returns:
        (padded input, (top, bottom, left, right), output height, output width)
    """
    _, _, h, w = x.shape
    out_h = conv_output_size(h, kh, stride, padding)
    out_w = conv_output_size(w, kw, stride, padding)
    if padding == "same":
        top, bottom = same_padding(h, kh, stride)
        left, right = same_padding(w, kw, stride)
    else:
        top = bottom = left = right = 0
    if top or bottom or left or right:
        x = np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)))
    return x, (top, bottom, left, right), out_h, out_w


def conv_windows(x_padded: Tensor, kh: int, kw: int, stride: int, out_h: int, out_w: int) -> Tensor:
    """Strided view of all kernel windows, shape N×C×H'×W'×kh×kw."""
    windows = sliding_window_view(x_padded, (kh, kw), axis=(2, 3))
    return windows[:, :, ::stride, ::stride][:, :, :out_h, :out_w]


def conv2d(
    x: Tensor,
    kernel: Tensor,
    stride: int = 1,
    padding: str = "same",
    method: str = "im2col",
) -> Tensor:
    """2-D cross-correlation (no kernel flip) of x[N×C×H×W] with kernel[F×C×kh×kw].

    Args:
        x: Input batch
        kernel: Filter bank
        stride: Positive stride applied to both spatial axes
        padding: "same" or "valid"
        method: "im2col" (strided windows + tensordot) or "direct"
            (per-offset accumulation, the reference path)

    Returns:
        Output batch N×F×H'×W'
    """
    _check_conv_args(x, kernel, stride, padding)
    if method not in CONV_METHODS:
        raise ConfigurationError(f"conv2d: unknown method {method!r}")

    f, _, kh, kw = kernel.shape
    x_padded, _, out_h, out_w = pad_input(x, kh, kw, stride, padding)

    if method == "direct":
        out = np.zeros((x.shape[0], f, out_h, out_w), dtype=np.result_type(x, kernel))
        for i in range(kh):
            for j in range(kw):
                patch = x_padded[
                    :, :,
                    i:i + stride * (out_h - 1) + 1:stride,
                    j:j + stride * (out_w - 1) + 1:stride,
                ]
                out += np.einsum("nchw,fc->nfhw", patch, kernel[:, :, i, j])
    else:
        windows = conv_windows(x_padded, kh, kw, stride, out_h, out_w)
        out = np.tensordot(windows, kernel, axes=([1, 4, 5], [1, 2, 3]))
        out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))

    return validated(out, "conv2d")


def relu(x: Tensor) -> Tensor:
    """Elementwise max(0, x)."""
    return validated(np.maximum(x, 0), "relu")


def _check_bn_args(x: Tensor, *vectors: Tensor) -> None:
    if x.ndim != 4:
        raise ShapeError(f"batch_norm: expected NCHW input, got shape {tuple(x.shape)}")
    channels = x.shape[1]
    for vec in vectors:
        if vec.shape != (channels,):
            raise ShapeError(
                f"batch_norm: parameter shape {tuple(vec.shape)} does not match "
                f"{channels} channels of input {tuple(x.shape)}"
            )


def batch_norm_forward(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
    update_stats: bool = True,
) -> Tuple[Tensor, Tensor, Tensor]:
    """Batch normalization returning (output, normalized input, inverse std).

    In training mode running statistics are updated in place (unless
    update_stats is False) as r <- momentum * r + (1 - momentum) * batch.
    """
    _check_bn_args(x, gamma, beta, running_mean, running_var)

    if training:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        if update_stats:
            running_mean *= momentum
            running_mean += (1.0 - momentum) * mean
            running_var *= momentum
            running_var += (1.0 - momentum) * var
    else:
        if np.any(running_var < 0):
            raise NumericDivergenceError("batch_norm: running variance is negative")
        mean = running_mean
        var = running_var

    inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype, copy=False)
    x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    out = gamma[None, :, None, None] * x_hat + beta[None, :, None, None]
    return validated(out, "batch_norm"), x_hat, inv_std


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
    update_stats: bool = True,
) -> Tensor:
    """Per-channel batch normalization of x[N×C×H×W]."""
    out, _, _ = batch_norm_forward(
        x, gamma, beta, running_mean, running_var, training,
        momentum=momentum, eps=eps, update_stats=update_stats,
    )
    return out


def global_avg_pool(x: Tensor) -> Tensor:
    """Per-channel spatial mean, N×C×H×W -> N×C."""
    if x.ndim != 4:
        raise ShapeError(f"global_avg_pool: expected NCHW input, got shape {tuple(x.shape)}")
    return validated(x.mean(axis=(2, 3)), "global_avg_pool")


def log_softmax(logits: Tensor) -> Tensor:
    """Row-wise log-softmax, stabilized by max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax."""
    return np.exp(log_softmax(logits))


def validate_one_hot(logits: Tensor, onehot: Tensor) -> None:
    """Check shapes and that every target row holds a single 1."""
    if logits.ndim != 2 or onehot.shape != logits.shape:
        raise ShapeError(
            f"softmax_cross_entropy: logits shape {tuple(logits.shape)} does not "
            f"match targets shape {tuple(onehot.shape)}"
        )
    binary = np.all((onehot == 0) | (onehot == 1), axis=1)
    single = onehot.sum(axis=1) == 1
    bad = np.flatnonzero(~(binary & single))
    if bad.size:
        raise TargetError(f"softmax_cross_entropy: malformed one-hot row {int(bad[0])}")


def softmax_cross_entropy(logits: Tensor, onehot: Tensor) -> float:
    """Mean over the batch of -log softmax(logits)[true class]."""
    validate_one_hot(logits, onehot)
    log_probs = log_softmax(logits)
    loss = -(onehot * log_probs).sum(axis=1).mean()
    return float(validated(np.asarray(loss), "softmax_cross_entropy"))


def accuracy(logits: Tensor, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax equals the label."""
    if len(labels) == 0:
        return 0.0
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def zeros(shape, dtype=None) -> Tensor:
    """Zero tensor of DEFAULT_DTYPE."""
    return np.zeros(shape, dtype=DEFAULT_DTYPE if dtype is None else dtype)


def ones(shape, dtype=None) -> Tensor:
    """Ones tensor of DEFAULT_DTYPE."""
    return np.ones(shape, dtype=DEFAULT_DTYPE if dtype is None else dtype)


def rng_for(seed: int, *streams: int) -> np.random.Generator:
    """Seeded PCG64 generator for a seed and optional sub-stream ids."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *streams])))


def he_uniform(rng: np.random.Generator, shape, fan_in: int, dtype=None) -> Tensor:
    """He-uniform initialization, U(-sqrt(6/fan_in), sqrt(6/fan_in))."""
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(DEFAULT_DTYPE if dtype is None else dtype)

