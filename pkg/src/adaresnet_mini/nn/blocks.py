"""Residual blocks with a weighted identity path.

A block computes ``relu(tfd + w * ipd)``: ``tfd`` is the output of the main
path (conv3x3 -> BN -> relu -> conv3x3 -> BN) and ``ipd`` is what the skip
path carries, the block input for identity blocks or BN(conv1x1(x)) for
projection blocks. ``w`` multiplies ``ipd`` only.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..core import autograd as ag
from ..exceptions import ConfigurationError, ShapeError
from .layers import BatchNorm2d, Conv2d
from .modes import BlockKind

SkipBinding = Union[ag.Parameter, float, None]


def ada_skip(tfd: ag.NodeLike, ipd: ag.NodeLike, w: Union[ag.Parameter, float]) -> ag.Node:
    """Weighted skip sum tfd + w * ipd.

    Args:
        tfd: Main-path output
        ipd: Skip-path tensor, same shape as tfd
        w: Trainable scalar Parameter or a Python constant

    Returns:
        Node whose backward gives dtfd = g, dipd = w * g and dw = sum(g * ipd)

    Raises:
        ShapeError: If tfd and ipd differ in shape
    """
    tfd, ipd = ag.as_node(tfd), ag.as_node(ipd)
    if tfd.shape != ipd.shape:
        raise ShapeError(
            f"ada_skip: main path shape {tfd.shape} does not match skip path shape {ipd.shape}"
        )
    ipd_value = ipd.value

    if isinstance(w, ag.Node):
        if w.value.size != 1:
            raise ShapeError(f"ada_skip: skip weight must be a scalar, got shape {w.shape}")
        weight = w.value.reshape(())
        parents = (tfd, ipd, w)
    else:
        weight = float(w)
        parents = (tfd, ipd)

    def backward_fn(g):
        g_tfd = g if tfd.requires_grad else None
        g_ipd = g * weight if ipd.requires_grad else None
        if len(parents) == 2:
            return g_tfd, g_ipd
        g_w = None
        if w.requires_grad:
            g_w = np.asarray(np.sum(g * ipd_value), dtype=w.dtype).reshape(w.shape)
        return g_tfd, g_ipd, g_w

    return ag.Node(tfd.value + weight * ipd_value, parents, backward_fn, "ada_skip")


@dataclass
class BlockSpec:
    """Shape of one residual block.

    Identity blocks keep channels and use stride 1; projection blocks put a
    strided 1x1 convolution on the skip path.
    """

    kind: BlockKind
    in_channels: int
    out_channels: int
    stride: int = 1
    stage: int = 1

    def __post_init__(self):
        self.kind = BlockKind(self.kind)

    def validate(self) -> None:
        for field_name in ("in_channels", "out_channels", "stride", "stage"):
            value = getattr(self, field_name)
            if not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"BlockSpec.{field_name} must be a positive int, got {value!r}")
        if self.kind is BlockKind.IDENTITY and (
            self.in_channels != self.out_channels or self.stride != 1
        ):
            raise ConfigurationError(
                f"Identity block needs in_channels == out_channels and stride 1, got "
                f"{self.in_channels}->{self.out_channels} stride {self.stride}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "stride": self.stride,
            "stage": self.stage,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BlockSpec":
        return cls(
            kind=BlockKind(data["kind"]),
            in_channels=int(data["in_channels"]),
            out_channels=int(data["out_channels"]),
            stride=int(data.get("stride", 1)),
            stage=int(data.get("stage", 1)),
        )


class ResidualBlock:
    """Layers of one block plus its skip-weight binding.

    ``skip`` is a Parameter for learnable modes, a float for fixed modes and
    None for a plain residual block (plain addition, no skip weight at all).
    """

    def __init__(
        self,
        spec: BlockSpec,
        site: str,
        rng: np.random.Generator,
        skip: SkipBinding,
        dtype=None,
    ):
        spec.validate()
        self.spec = spec
        self.site = site
        self.skip = skip
        self.conv1 = Conv2d(f"{site}.conv1", spec.in_channels, spec.out_channels, 3, spec.stride, rng, dtype)
        self.bn1 = BatchNorm2d(f"{site}.bn1", spec.out_channels, dtype)
        self.conv2 = Conv2d(f"{site}.conv2", spec.out_channels, spec.out_channels, 3, 1, rng, dtype)
        self.bn2 = BatchNorm2d(f"{site}.bn2", spec.out_channels, dtype)
        self.shortcut_conv: Optional[Conv2d] = None
        self.shortcut_bn: Optional[BatchNorm2d] = None
        if spec.kind is BlockKind.PROJECTION:
            self.shortcut_conv = Conv2d(
                f"{site}.shortcut.conv", spec.in_channels, spec.out_channels, 1, spec.stride, rng, dtype
            )
            self.shortcut_bn = BatchNorm2d(f"{site}.shortcut.bn", spec.out_channels, dtype)

    def __call__(self, x: ag.NodeLike, training: bool, update_stats: bool = True) -> ag.Node:
        if self.spec.kind is BlockKind.IDENTITY:
            return identity_block(x, self, training, update_stats)
        return projection_block(x, self, training, update_stats)

    def main_path(self, x: ag.NodeLike, training: bool, update_stats: bool = True) -> ag.Node:
        """tfd: conv3x3 -> BN -> relu -> conv3x3 -> BN."""
        h = ag.relu(self.bn1(self.conv1(x), training, update_stats))
        return self.bn2(self.conv2(h), training, update_stats)

    def merge(self, tfd: ag.Node, ipd: ag.NodeLike) -> ag.Node:
        """relu of the skip sum for this block's binding."""
        if self.skip is None:
            return ag.relu(ag.add(tfd, ipd))
        return ag.relu(ada_skip(tfd, ipd, self.skip))

    def layers(self) -> List[Any]:
        layers = [self.conv1, self.bn1, self.conv2, self.bn2]
        if self.shortcut_conv is not None:
            layers += [self.shortcut_conv, self.shortcut_bn]
        return layers

    def parameters(self) -> List[ag.Parameter]:
        return [p for layer in self.layers() for p in layer.parameters()]

    def buffers(self) -> Dict[str, np.ndarray]:
        out: Dict[str, np.ndarray] = {}
        for layer in self.layers():
            if isinstance(layer, BatchNorm2d):
                out.update(layer.buffers())
        return out


def _check_input(x: ag.Node, block: ResidualBlock) -> None:
    if x.value.ndim != 4 or x.shape[1] != block.spec.in_channels:
        raise ShapeError(
            f"{block.site}: expected {block.spec.in_channels} input channels, got input shape {x.shape}"
        )


def identity_block(x: ag.NodeLike, block: ResidualBlock, training: bool, update_stats: bool = True) -> ag.Node:
    """relu(ada_skip(tfd, x, w)) for an identity block."""
    x = ag.as_node(x)
    if block.spec.kind is not BlockKind.IDENTITY:
        raise ConfigurationError(f"{block.site}: identity_block called on a {block.spec.kind.value} block")
    _check_input(x, block)
    return block.merge(block.main_path(x, training, update_stats), x)


def projection_block(x: ag.NodeLike, block: ResidualBlock, training: bool, update_stats: bool = True) -> ag.Node:
    """relu(ada_skip(tfd, BN(conv1x1(x)), w)) for a projection block."""
    x = ag.as_node(x)
    if block.spec.kind is not BlockKind.PROJECTION:
        raise ConfigurationError(f"{block.site}: projection_block called on a {block.spec.kind.value} block")
    _check_input(x, block)
    tfd = block.main_path(x, training, update_stats)
    ipd = block.shortcut_bn(block.shortcut_conv(x), training, update_stats)
    return block.merge(tfd, ipd)
