"""Training harness, mode comparison and run artifacts."""

from .artifacts import MetricsRecord, MetricsWriter, RunManifest, WeightReport, read_metrics
from .compare import Comparison, RunOutcome, compare_modes
from .config import TrainConfig, read_config_file, resolve_config
from .timing import EpochTimer
from .train import TrainResult, evaluate, train

__all__ = [
    "Comparison",
    "EpochTimer",
    "MetricsRecord",
    "MetricsWriter",
    "RunManifest",
    "RunOutcome",
    "TrainConfig",
    "TrainResult",
    "WeightReport",
    "compare_modes",
    "evaluate",
    "read_config_file",
    "read_metrics",
    "resolve_config",
    "train",
]
