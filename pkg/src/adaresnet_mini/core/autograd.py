"""Reverse-mode automatic differentiation over the tensor primitives.

Every differentiable operation returns a ``Node`` holding its forward value,
its parents and a backward closure over the forward values it needs. Calling
``backward`` on a scalar loss walks the recorded graph once in reverse
topological order and accumulates gradients into the ``Parameter`` leaves.
"""

from contextlib import contextmanager
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import GraphError, ShapeError
from ..settings import BN_EPSILON, BN_MOMENTUM
from . import tensor as T

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Node:
    """A value recorded on the tape (TapeNode)."""

    __slots__ = ("value", "parents", "backward_fn", "op", "grad", "requires_grad")

    def __init__(
        self,
        value: np.ndarray,
        parents: Tuple["Node", ...] = (),
        backward_fn: Optional[BackwardFn] = None,
        op: str = "constant",
        requires_grad: Optional[bool] = None,
    ):
        self.value = value
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.grad: Optional[np.ndarray] = None
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in parents)
        self.requires_grad = requires_grad

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def item(self) -> float:
        """Scalar value as a Python float."""
        return float(self.value)

    def __repr__(self) -> str:
        return f"Node(op={self.op}, shape={self.value.shape})"


class Parameter(Node):
    """A named leaf whose gradient is collected by backward."""

    __slots__ = ("name", "trainable")

    def __init__(self, name: str, value, trainable: bool = True, dtype=None):
        super().__init__(np.array(T.as_tensor(value, dtype)), op="parameter", requires_grad=trainable)
        self.name = name
        self.trainable = trainable
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        """Reset the accumulated gradient to zero."""
        self.grad = np.zeros_like(self.value)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape}, trainable={self.trainable})"


NodeLike = Union[Node, np.ndarray, float]


class ReluPattern:
    """Activation masks of every relu on one forward pass, in call order.

    After ``record()`` each relu stores ``x > 0``. After ``replay()`` each relu
    applies the stored mask instead, so the graph stays on the linear piece
    of the recorded point, and ``flips`` counts units whose sign differs
    from the recording.
    """

    def __init__(self):
        self.masks: List[np.ndarray] = []
        self.replaying = False
        self.flips = 0
        self._position = 0

    def record(self) -> None:
        self.masks = []
        self.replaying = False

    def replay(self) -> None:
        self.replaying = True
        self.flips = 0
        self._position = 0

    def __call__(self, pre: np.ndarray) -> np.ndarray:
        natural = pre > 0
        if not self.replaying:
            self.masks.append(natural)
            return natural
        if self._position >= len(self.masks) or self.masks[self._position].shape != natural.shape:
            raise GraphError("relu replay does not match the recorded forward pass")
        mask = self.masks[self._position]
        self._position += 1
        self.flips += int(np.count_nonzero(mask != natural))
        return mask


_relu_pattern: Optional[ReluPattern] = None


@contextmanager
def relu_pattern(pattern: ReluPattern) -> Iterator[ReluPattern]:
    """Route every relu built inside the block through pattern."""
    global _relu_pattern
    previous = _relu_pattern
    _relu_pattern = pattern
    try:
        yield pattern
    finally:
        _relu_pattern = previous


def constant(value, dtype=None) -> Node:
    """Wrap a tensor as a leaf that never receives a gradient."""
    return Node(T.as_tensor(value, dtype), op="constant", requires_grad=False)


def as_node(value: NodeLike) -> Node:
    """Pass nodes through and wrap anything else with constant()."""
    return value if isinstance(value, Node) else constant(value)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum grad over the axes that broadcasting added to reach its shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _needs(node: Node, grad: np.ndarray) -> Optional[np.ndarray]:
    return grad if node.requires_grad else None


def add(a: NodeLike, b: NodeLike) -> Node:
    """Elementwise a + b for equally shaped operands."""
    a, b = as_node(a), as_node(b)
    if a.shape != b.shape:
        raise ShapeError(f"add: shape {a.shape} does not match shape {b.shape}")

    def backward_fn(g):
        return _needs(a, g), _needs(b, g)

    return Node(a.value + b.value, (a, b), backward_fn, "add")


def mul(a: NodeLike, b: NodeLike) -> Node:
    """Elementwise a * b with numpy broadcasting (used for scalar factors)."""
    a, b = as_node(a), as_node(b)
    av, bv = a.value, b.value

    def backward_fn(g):
        ga = _unbroadcast(g * bv, av.shape) if a.requires_grad else None
        gb = _unbroadcast(g * av, bv.shape) if b.requires_grad else None
        return ga, gb

    return Node(T.as_tensor(av * bv), (a, b), backward_fn, "mul")


def scale(a: NodeLike, factor: float) -> Node:
    """Multiply by a Python constant."""
    a = as_node(a)

    def backward_fn(g):
        return (g * factor,)

    return Node(a.value * factor, (a,), backward_fn, "scale")


def sum_all(a: NodeLike) -> Node:
    """Sum of all elements, as a 0-d node."""
    a = as_node(a)
    shape, dtype = a.shape, a.dtype

    def backward_fn(g):
        return (np.full(shape, g, dtype=dtype),)

    return Node(np.asarray(a.value.sum(), dtype=dtype), (a,), backward_fn, "sum")


def matmul(a: NodeLike, b: NodeLike) -> Node:
    """Matrix product recorded on the tape."""
    a, b = as_node(a), as_node(b)
    av, bv = a.value, b.value

    def backward_fn(g):
        ga = g @ bv.T if a.requires_grad else None
        gb = av.T @ g if b.requires_grad else None
        return ga, gb

    return Node(T.matmul(av, bv), (a, b), backward_fn, "matmul")


def add_bias(x: NodeLike, bias: NodeLike) -> Node:
    """Row-wise bias addition, x[N×K] + bias[K]."""
    x, bias = as_node(x), as_node(bias)
    if x.value.ndim != 2 or bias.shape != (x.shape[1],):
        raise ShapeError(f"add_bias: bias shape {bias.shape} does not fit input shape {x.shape}")

    def backward_fn(g):
        return _needs(x, g), (g.sum(axis=0) if bias.requires_grad else None)

    return Node(x.value + bias.value, (x, bias), backward_fn, "add_bias")


def conv2d(x: NodeLike, kernel: NodeLike, stride: int = 1, padding: str = "same") -> Node:
    """Convolution recorded on the tape (im2col forward path)."""
    x, kernel = as_node(x), as_node(kernel)
    out = T.conv2d(x.value, kernel.value, stride=stride, padding=padding)
    kv = kernel.value
    _, _, kh, kw = kv.shape
    x_padded, (top, _, left, _), out_h, out_w = T.pad_input(x.value, kh, kw, stride, padding)
    h, w = x.shape[2], x.shape[3]

    def backward_fn(g):
        g_kernel = None
        if kernel.requires_grad:
            windows = T.conv_windows(x_padded, kh, kw, stride, out_h, out_w)
            g_kernel = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        g_x = None
        if x.requires_grad:
            g_padded = np.zeros_like(x_padded)
            for i in range(kh):
                for j in range(kw):
                    contrib = np.tensordot(g, kv[:, :, i, j], axes=([1], [0]))
                    g_padded[
                        :, :,
                        i:i + stride * (out_h - 1) + 1:stride,
                        j:j + stride * (out_w - 1) + 1:stride,
                    ] += contrib.transpose(0, 3, 1, 2)
            g_x = g_padded[:, :, top:top + h, left:left + w]
        return g_x, g_kernel

    return Node(out, (x, kernel), backward_fn, "conv2d")


def relu(x: NodeLike) -> Node:
    """ReLU; the subgradient at 0 is 0."""
    x = as_node(x)
    if _relu_pattern is None:
        mask = x.value > 0
        out = T.relu(x.value)
    else:
        mask = _relu_pattern(x.value)
        out = T.validated(np.where(mask, x.value, np.zeros((), dtype=x.dtype)), "relu")

    def backward_fn(g):
        return (g * mask,)

    return Node(out, (x,), backward_fn, "relu")


def batch_norm(
    x: NodeLike,
    gamma: Node,
    beta: Node,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPSILON,
    update_stats: bool = True,
) -> Node:
    """Batch normalization; running-stat updates are side effects, not graph edges."""
    x = as_node(x)
    out, x_hat, inv_std = T.batch_norm_forward(
        x.value, gamma.value, beta.value, running_mean, running_var, training,
        momentum=momentum, eps=eps, update_stats=update_stats,
    )
    gv = gamma.value
    axes = (0, 2, 3)
    count = x.shape[0] * x.shape[2] * x.shape[3]

    def backward_fn(g):
        g_gamma = (g * x_hat).sum(axis=axes) if gamma.requires_grad else None
        g_beta = g.sum(axis=axes) if beta.requires_grad else None
        g_x = None
        if x.requires_grad:
            g_hat = g * gv[None, :, None, None]
            if training:
                g_x = (inv_std[None, :, None, None] / count) * (
                    count * g_hat
                    - g_hat.sum(axis=axes)[None, :, None, None]
                    - x_hat * (g_hat * x_hat).sum(axis=axes)[None, :, None, None]
                )
            else:
                g_x = g_hat * inv_std[None, :, None, None]
        return g_x, g_gamma, g_beta

    return Node(out, (x, gamma, beta), backward_fn, "batch_norm")


def global_avg_pool(x: NodeLike) -> Node:
    """Spatial mean recorded on the tape."""
    x = as_node(x)
    n, c, h, w = x.shape

    def backward_fn(g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), (n, c, h, w)).copy(),)

    return Node(T.global_avg_pool(x.value), (x,), backward_fn, "global_avg_pool")


def softmax_cross_entropy(logits: NodeLike, onehot: np.ndarray) -> Node:
    """Mean cross-entropy of softmax(logits) against one-hot targets (0-d node)."""
    logits = as_node(logits)
    T.validate_one_hot(logits.value, onehot)
    log_probs = T.log_softmax(logits.value)
    loss = -(onehot * log_probs).sum(axis=1).mean()
    batch = logits.shape[0]

    def backward_fn(g):
        return ((np.exp(log_probs) - onehot) * (g / batch),)

    value = np.asarray(loss, dtype=logits.dtype)
    return Node(T.validated(value, "softmax_cross_entropy"), (logits,), backward_fn, "softmax_cross_entropy")


def _topological_order(root: Node) -> List[Node]:
    """Nodes reachable from root that require grad, parents before children."""
    order: List[Node] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(
    loss: Node,
    params: Optional[Iterable[Parameter]] = None,
) -> Dict[str, np.ndarray]:
    """Reverse-mode pass from a scalar loss.

    Args:
        loss: Scalar node produced by recorded operations
        params: Extra parameters to report even when the loss does not reach them

    Returns:
        Mapping of parameter name to gradient for every trainable parameter
        reachable from the loss, plus any listed in params

    Raises:
        GraphError: If the loss is not scalar or was not produced on the tape
    """
    if loss.value.size != 1:
        raise GraphError(f"backward: loss must be scalar, got shape {loss.shape}")
    if loss.backward_fn is None and not loss.parents:
        raise GraphError("backward: detached graph, the loss was not produced by a recorded operation")

    extra = list(params or [])
    for param in extra:
        param.zero_grad()

    order = _topological_order(loss) if loss.requires_grad else []
    reached = [node for node in order if isinstance(node, Parameter)]
    for param in reached:
        param.zero_grad()

    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.backward_fn is None or node.grad is None:
            continue
        parent_grads = node.backward_fn(node.grad)
        for parent, grad in zip(node.parents, parent_grads):
            if grad is None or not parent.requires_grad:
                continue
            parent.grad = grad if parent.grad is None else parent.grad + grad
        if not isinstance(node, Parameter):
            node.grad = None

    grads = {p.name: p.grad for p in reached if p.trainable}
    for param in extra:
        grads.setdefault(param.name, param.grad)
    return grads
