"""Residual blocks with adaptive skip weights and the mini model."""

from .blocks import BlockSpec, ResidualBlock, ada_skip, identity_block, projection_block
from .checkpoint import Checkpoint, load_checkpoint, read_checkpoint, save_checkpoint
from .model import Model, ModelConfig, SkipWeight, build_model, extract_skip_weights
from .modes import AdaSkipMode, BlockKind, parse_mode

__all__ = [
    "AdaSkipMode",
    "BlockKind",
    "BlockSpec",
    "Checkpoint",
    "Model",
    "ModelConfig",
    "ResidualBlock",
    "SkipWeight",
    "ada_skip",
    "build_model",
    "extract_skip_weights",
    "identity_block",
    "load_checkpoint",
    "parse_mode",
    "projection_block",
    "read_checkpoint",
    "save_checkpoint",
]
