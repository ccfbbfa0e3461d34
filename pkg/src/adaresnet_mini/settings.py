"""Default settings and numeric constants."""

from typing import Dict, List

import numpy as np

# Single numeric type for tensors, parameters and gradients
DEFAULT_DTYPE = np.float32

# Batch normalization
BN_EPSILON: float = 1e-5
BN_MOMENTUM: float = 0.9

# Gradient checking
GRAD_CHECK_EPSILON: float = 1e-3
GRAD_CHECK_TOLERANCE: float = 1e-2
RELATIVE_ERROR_FLOOR: float = 1e-8

# Adam defaults (canonical values; no schedule, no decay)
ADAM_BETA1: float = 0.9
ADAM_BETA2: float = 0.999
ADAM_EPSILON: float = 1e-8
DEFAULT_LEARNING_RATE: float = 0.001

# Desk-scale experiment defaults
DEFAULT_DATASET: str = "mnist"
DEFAULT_TRAIN_SUBSAMPLE: int = 5000
DEFAULT_TEST_SUBSAMPLE: int = 1000
DEFAULT_EPOCHS: int = 5
DEFAULT_BATCH_SIZE: int = 64
DEFAULT_OPTIMIZER: str = "adam"
DEFAULT_MODE: str = "per-block"
DEFAULT_INIT_WEIGHT: float = 0.0
DEFAULT_SEED: int = 0
DEFAULT_OUT_DIR: str = "runs"
DEFAULT_DATA_DIR: str = "./data"
DEFAULT_ROUNDS: int = 3

# Environment variables
ENV_PREFIX: str = "ADARESNET_"
ENV_DATA_DIR: str = "ADARESNET_DATA_DIR"
ENV_DEBUG_NUMERICS: str = "ADARESNET_DEBUG_NUMERICS"

# Config source priority (lower number = higher priority)
SOURCE_PRIORITY: Dict[str, int] = {
    "cli": 1,  # Explicit command-line flags
    "system": 2,  # ADARESNET_* environment variables
    "file": 3,  # --config file
    "defaults": 4,  # TrainConfig defaults
}

# Truthy/falsy vocabulary for text-sourced booleans
TRUE_VALUES: List[str] = ["1", "true", "yes", "y", "t", "on"]
FALSE_VALUES: List[str] = ["0", "false", "no", "n", "f", "off"]

# Artifact file names
METRICS_FILE: str = "metrics.csv"
WEIGHTS_FILE: str = "weights.csv"
SUMMARY_FILE: str = "summary.txt"
CHECKPOINT_FILE: str = "model.ckpt"
ACCURACY_FILE: str = "accuracy.csv"
MANIFEST_FILE: str = "run.json"
CHECKSUM_MANIFEST: str = "SHA256SUMS"

METRICS_HEADER: List[str] = ["epoch", "train_loss", "train_acc", "test_acc", "seconds"]
