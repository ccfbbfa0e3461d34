"""adaresnet_mini: residual networks with trainable skip weights on a numpy autograd core"""

__version__ = "0.1.0"

# Core exports
from .exceptions import (
    AdaResNetError,
    AnalysisError,
    CheckpointError,
    ConfigurationError,
    DatasetError,
    GraphError,
    NumericDivergenceError,
    OptimizerError,
    ShapeError,
    TargetError,
)
from .core import check_model_gradients, grad_check
from .nn import (
    AdaSkipMode,
    ModelConfig,
    build_model,
    extract_skip_weights,
    load_checkpoint,
    parse_mode,
    save_checkpoint,
)
from .optim import Adam, SGD, build_optimizer

# Harness and analysis
from .experiment import TrainConfig, compare_modes, resolve_config, train
from .analysis import load_weight_matrix, variance_report

# Utilities
from .utils import get_logger

__all__ = [
    "AdaResNetError",
    "AnalysisError",
    "CheckpointError",
    "ConfigurationError",
    "DatasetError",
    "GraphError",
    "NumericDivergenceError",
    "OptimizerError",
    "ShapeError",
    "TargetError",
    "check_model_gradients",
    "grad_check",
    "AdaSkipMode",
    "ModelConfig",
    "build_model",
    "extract_skip_weights",
    "load_checkpoint",
    "parse_mode",
    "save_checkpoint",
    "Adam",
    "SGD",
    "build_optimizer",
    "TrainConfig",
    "compare_modes",
    "resolve_config",
    "train",
    "load_weight_matrix",
    "variance_report",
    "get_logger",
    "__version__",
]
