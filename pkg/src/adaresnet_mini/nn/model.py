"""The mini residual network and its configuration."""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core import autograd as ag
from ..core import tensor as T
from ..exceptions import CheckpointError, ConfigurationError, ShapeError
from ..settings import DEFAULT_DTYPE, DEFAULT_INIT_WEIGHT
from .blocks import BlockSpec, ResidualBlock
from .layers import BatchNorm2d, Conv2d, Dense
from .modes import AdaSkipMode, BlockKind, parse_mode

MINI_WIDTHS: Tuple[int, ...] = (16, 32, 64)


@dataclass
class ModelConfig:
    """Architecture and skip-weight policy of a model.

    Attributes:
        input_shape: (channels, height, width) of one image
        stem_channels: Output channels of the stem convolution
        stages: Block specs per stage, in architectural order
        num_classes: Number of output classes (at least 2)
        mode: Skip-weight allocation policy
        init_weight: Initial value of every trainable skip weight
        seed: Seed of the layer initializer
        plain_residual: Build blocks with plain addition and no skip weight
    """

    input_shape: Tuple[int, int, int] = (1, 28, 28)
    stem_channels: int = MINI_WIDTHS[0]
    stages: List[List[BlockSpec]] = field(default_factory=list)
    num_classes: int = 10
    mode: AdaSkipMode = field(default_factory=AdaSkipMode.per_block)
    init_weight: float = DEFAULT_INIT_WEIGHT
    seed: int = 0
    plain_residual: bool = False

    def __post_init__(self):
        self.mode = parse_mode(self.mode)
        self.input_shape = tuple(self.input_shape)

    @classmethod
    def mini(
        cls,
        input_shape: Sequence[int] = (1, 28, 28),
        num_classes: int = 10,
        mode="per-block",
        init_weight: float = DEFAULT_INIT_WEIGHT,
        seed: int = 0,
        plain_residual: bool = False,
        widths: Sequence[int] = MINI_WIDTHS,
    ) -> "ModelConfig":
        """Reference architecture: one projection and one identity block per stage.

        Stage 1 keeps the stem width at stride 1; later stages double the
        width at stride 2.
        """
        stages = []
        in_channels = widths[0]
        for index, width in enumerate(widths, start=1):
            stride = 1 if index == 1 else 2
            stages.append([
                BlockSpec(BlockKind.PROJECTION, in_channels, width, stride, index),
                BlockSpec(BlockKind.IDENTITY, width, width, 1, index),
            ])
            in_channels = width
        return cls(
            input_shape=tuple(input_shape),
            stem_channels=widths[0],
            stages=stages,
            num_classes=num_classes,
            mode=mode,
            init_weight=init_weight,
            seed=seed,
            plain_residual=plain_residual,
        )

    def validate(self) -> None:
        """Check channel wiring, class count and mode consistency.

        Raises:
            ConfigurationError: On any invalid setting
        """
        if len(self.input_shape) != 3 or any(int(d) < 1 for d in self.input_shape):
            raise ConfigurationError(f"input_shape must be three positive sizes, got {self.input_shape}")
        if self.num_classes < 2:
            raise ConfigurationError(f"num_classes must be at least 2, got {self.num_classes}")
        if self.stem_channels < 1:
            raise ConfigurationError(f"stem_channels must be positive, got {self.stem_channels}")
        if not self.stages or any(not stage for stage in self.stages):
            raise ConfigurationError("Model needs at least one stage and no empty stages")
        if not np.isfinite(self.init_weight):
            raise ConfigurationError(f"init_weight must be finite, got {self.init_weight}")
        if self.plain_residual and str(self.mode) != "fixed:1":
            raise ConfigurationError(f"plain_residual builds require mode fixed:1, got {self.mode}")

        channels = self.stem_channels
        for s, stage in enumerate(self.stages, start=1):
            for b, spec in enumerate(stage, start=1):
                spec.validate()
                if spec.in_channels != channels:
                    raise ConfigurationError(
                        f"Invalid stage wiring at stage{s}.block{b}: expects {spec.in_channels} "
                        f"input channels but receives {channels}"
                    )
                channels = spec.out_channels

    @property
    def blocks(self) -> List[Tuple[str, BlockSpec]]:
        """(site name, spec) pairs in architectural order."""
        return [
            (f"stage{s}.block{b}", spec)
            for s, stage in enumerate(self.stages, start=1)
            for b, spec in enumerate(stage, start=1)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "input_shape": list(self.input_shape),
            "stem_channels": self.stem_channels,
            "stages": [[spec.to_dict() for spec in stage] for stage in self.stages],
            "num_classes": self.num_classes,
            "mode": str(self.mode),
            "init_weight": self.init_weight,
            "seed": self.seed,
            "plain_residual": self.plain_residual,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        try:
            return cls(
                input_shape=tuple(int(d) for d in data["input_shape"]),
                stem_channels=int(data["stem_channels"]),
                stages=[[BlockSpec.from_dict(spec) for spec in stage] for stage in data["stages"]],
                num_classes=int(data["num_classes"]),
                mode=parse_mode(data["mode"]),
                init_weight=float(data.get("init_weight", DEFAULT_INIT_WEIGHT)),
                seed=int(data.get("seed", 0)),
                plain_residual=bool(data.get("plain_residual", False)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid model config: {e}")


@dataclass
class SkipWeight:
    """Value of the skip weight at one site."""

    site: str
    value: float
    trainable: bool
    parameter: Optional[str] = None


class Model:
    """Stem, residual stages, global average pool and a dense classifier."""

    def __init__(self, config: ModelConfig, dtype=DEFAULT_DTYPE):
        config.validate()
        self.config = config
        self.dtype = np.dtype(dtype)
        rng = T.rng_for(config.seed)
        channels = config.input_shape[0]

        self.stem_conv = Conv2d("stem.conv", channels, config.stem_channels, 3, 1, rng, self.dtype)
        self.stem_bn = BatchNorm2d("stem.bn", config.stem_channels, self.dtype)

        self.skip_params: "OrderedDict[str, ag.Parameter]" = OrderedDict()
        self.blocks: List[ResidualBlock] = []
        for site, spec in config.blocks:
            self.blocks.append(ResidualBlock(spec, site, rng, self._bind_skip(site, spec), self.dtype))

        width = config.stages[-1][-1].out_channels
        self.head = Dense("head.dense", width, config.num_classes, rng, self.dtype)

    def _bind_skip(self, site: str, spec: BlockSpec):
        mode = self.config.mode
        if self.config.plain_residual:
            return None
        if not mode.trainable:
            return mode.value
        name = mode.parameter_name(site, spec.kind)
        if name not in self.skip_params:
            value = np.asarray(self.config.init_weight, dtype=self.dtype)
            self.skip_params[name] = ag.Parameter(name, value)
        return self.skip_params[name]

    @property
    def sites(self) -> List[str]:
        return [block.site for block in self.blocks]

    def forward(self, x, training: bool, update_stats: bool = True) -> ag.Node:
        """Logits node for a batch x[N×C×H×W]."""
        x = ag.as_node(x)
        expected = tuple(self.config.input_shape)
        if x.value.ndim != 4 or tuple(x.shape[1:]) != expected:
            raise ShapeError(f"Model expects input of shape N×{expected}, got {x.shape}")
        h = ag.relu(self.stem_bn(self.stem_conv(x), training, update_stats))
        for block in self.blocks:
            h = block(h, training, update_stats)
        return self.head(ag.global_avg_pool(h))

    def loss(self, x, onehot: np.ndarray, training: bool = True, update_stats: bool = True) -> ag.Node:
        """Mean softmax cross-entropy of the logits against one-hot targets."""
        logits = self.forward(x, training, update_stats)
        return ag.softmax_cross_entropy(logits, np.asarray(onehot, dtype=self.dtype))

    def predict(self, x: np.ndarray, batch_size: Optional[int] = None) -> np.ndarray:
        """Inference-mode logits, evaluated in chunks of batch_size."""
        if batch_size is None or len(x) <= batch_size:
            return self.forward(x, training=False).value
        chunks = [
            self.forward(x[i:i + batch_size], training=False).value
            for i in range(0, len(x), batch_size)
        ]
        return np.concatenate(chunks, axis=0)

    def layer_parameters(self) -> List[ag.Parameter]:
        params = self.stem_conv.parameters() + self.stem_bn.parameters()
        for block in self.blocks:
            params += block.parameters()
        return params + self.head.parameters()

    def parameters(self) -> List[ag.Parameter]:
        """All parameters: layers in architectural order, then skip weights."""
        return self.layer_parameters() + list(self.skip_params.values())

    def trainable(self) -> List[ag.Parameter]:
        return [p for p in self.parameters() if p.trainable]

    def skip_parameters(self) -> List[ag.Parameter]:
        return list(self.skip_params.values())

    def buffers(self) -> "OrderedDict[str, np.ndarray]":
        """Batch-norm running statistics by name."""
        out: "OrderedDict[str, np.ndarray]" = OrderedDict(self.stem_bn.buffers())
        for block in self.blocks:
            out.update(block.buffers())
        return out

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Copies of all parameters and buffers."""
        state: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for param in self.parameters():
            state[param.name] = param.value.copy()
        for name, buf in self.buffers().items():
            state[name] = buf.copy()
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Copy values into parameters and buffers in place (casting to the model dtype).

        Raises:
            CheckpointError: On missing or unexpected names or mismatched shapes
        """
        targets = {p.name: p.value for p in self.parameters()}
        targets.update(self.buffers())
        missing = sorted(set(targets) - set(state))
        unexpected = sorted(set(state) - set(targets))
        if missing or unexpected:
            raise CheckpointError(f"State mismatch: missing {missing}, unexpected {unexpected}")
        for name, target in targets.items():
            source = np.asarray(state[name])
            if source.shape != target.shape:
                raise CheckpointError(
                    f"State entry {name!r} has shape {source.shape}, model expects {target.shape}"
                )
            target[...] = source

    def astype(self, dtype) -> "Model":
        """Independent copy of the model with every tensor in dtype."""
        copy = Model(self.config, dtype)
        copy.load_state_dict(self.state_dict())
        return copy


def build_model(config: ModelConfig, dtype=DEFAULT_DTYPE) -> Model:
    """Build a model with deterministic, seeded initialization.

    Layer parameters are drawn in architectural order from one PCG64 stream,
    independent of the skip mode, so equal seeds give equal layers across modes.
    """
    return Model(config, dtype)


def extract_skip_weights(model: Model) -> List[SkipWeight]:
    """Skip weight at every site, in architectural order."""
    weights = []
    for block in model.blocks:
        if block.skip is None:
            weights.append(SkipWeight(block.site, 1.0, False))
        elif isinstance(block.skip, ag.Parameter):
            weights.append(SkipWeight(block.site, float(block.skip.value), block.skip.trainable, block.skip.name))
        else:
            weights.append(SkipWeight(block.site, float(block.skip), False))
    return weights
