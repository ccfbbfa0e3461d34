"""Run configuration and its resolution from defaults, files, environment and CLI."""

import dataclasses
import os
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

from ..data.sources import DATASETS
from ..exceptions import ConfigurationError
from ..nn.modes import AdaSkipMode, parse_mode
from ..optim import OPTIMIZERS
from ..settings import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_DATA_DIR,
    DEFAULT_DATASET,
    DEFAULT_EPOCHS,
    DEFAULT_INIT_WEIGHT,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MODE,
    DEFAULT_OPTIMIZER,
    DEFAULT_OUT_DIR,
    DEFAULT_SEED,
    DEFAULT_TEST_SUBSAMPLE,
    DEFAULT_TRAIN_SUBSAMPLE,
    ENV_PREFIX,
    FALSE_VALUES,
    TRUE_VALUES,
)
from .merger import ConfigurationMerger
from .tracing import Tracer

# Fields that choose where or how a run executes without changing any
# computed value; they are left out of the config embedded in artifacts.
EXECUTION_FIELDS = ("out_dir", "data_dir", "plain_residual")


@dataclass
class TrainConfig:
    """One training run.

    Attributes:
        dataset: "mnist" or "cifar10"
        subsample: Stratified training subset size (0 = full split)
        test_subsample: Stratified test subset size (0 = full split)
        epochs: Number of epochs, at least 1
        batch_size: Mini-batch size, at least 1
        optimizer: "sgd" or "adam"
        lr: Learning rate
        mode: Skip-weight policy
        init_weight: Initial value of trainable skip weights
        seed: Seed for initialization, subsampling and shuffling
        out_dir: Directory receiving the run artifacts
        data_dir: Dataset root
        plain_residual: Build plain residual blocks (requires mode fixed:1)
        record_timing: Write wall-clock seconds to metrics.csv
    """

    dataset: str = DEFAULT_DATASET
    subsample: int = DEFAULT_TRAIN_SUBSAMPLE
    test_subsample: int = DEFAULT_TEST_SUBSAMPLE
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    optimizer: str = DEFAULT_OPTIMIZER
    lr: float = DEFAULT_LEARNING_RATE
    mode: AdaSkipMode = field(default_factory=lambda: parse_mode(DEFAULT_MODE))
    init_weight: float = DEFAULT_INIT_WEIGHT
    seed: int = DEFAULT_SEED
    out_dir: str = DEFAULT_OUT_DIR
    data_dir: str = DEFAULT_DATA_DIR
    plain_residual: bool = False
    record_timing: bool = False

    def __post_init__(self):
        self.mode = parse_mode(self.mode)
        self.dataset = str(self.dataset).strip().lower().replace("-", "")
        self.optimizer = str(self.optimizer).strip().lower()

    def validate(self) -> None:
        """Raise ConfigurationError on any invalid setting."""
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.subsample < 0 or self.test_subsample < 0:
            raise ConfigurationError("subsample sizes must be non-negative (0 = full split)")
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.dataset not in DATASETS:
            raise ConfigurationError(f"Unknown dataset {self.dataset!r}; expected one of {', '.join(DATASETS)}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(
                f"Unknown optimizer {self.optimizer!r}; expected one of {', '.join(OPTIMIZERS)}"
            )
        if self.plain_residual and str(self.mode) != "fixed:1":
            raise ConfigurationError(f"plain_residual requires mode fixed:1, got {self.mode}")

    def replace(self, **changes: Any) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly dict with the mode in its textual form."""
        out = dataclasses.asdict(self)
        out["mode"] = str(self.mode)
        return out

    def embedded(self) -> Dict[str, Any]:
        """Settings that determine a run's results, as embedded in artifacts."""
        return {k: v for k, v in self.to_dict().items() if k not in EXECUTION_FIELDS}


FIELD_TYPES: Dict[str, Callable] = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _expand_variables(value: str, env: Mapping[str, str], visited: Optional[set] = None) -> str:
    """Expand ${VAR} references with cycle detection."""
    visited = visited or set()

    def replace_var(match):
        name = match.group(1)
        if name in visited:
            raise ConfigurationError(f"Circular reference detected for variable: {name}")
        if name not in env:
            return match.group(0)
        visited.add(name)
        result = _expand_variables(env[name], env, visited)
        visited.remove(name)
        return result

    return re.sub(r"\$\{([^}]+)\}", replace_var, value)


def _cast_value(key: str, value: Any, to_type: Callable) -> Any:
    """Cast a text value to a TrainConfig field type."""
    if not isinstance(value, str):
        if to_type is AdaSkipMode:
            return parse_mode(value)
        if to_type is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if to_type is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if to_type is bool and isinstance(value, bool):
            return value
        if to_type is str:
            return str(value)
        value = str(value)

    if to_type is bool:
        val = value.strip().lower()
        if val in TRUE_VALUES:
            return True
        if val in FALSE_VALUES:
            return False
        raise ConfigurationError(f"Cannot cast {key}={value!r} to bool")
    if to_type is AdaSkipMode:
        return parse_mode(value)
    try:
        return to_type(value.strip())
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Failed to cast {key}={value!r} to {to_type.__name__}: {e}")


def _normalize_key(key: str) -> str:
    key = key.strip()
    if key.upper().startswith(ENV_PREFIX):
        key = key[len(ENV_PREFIX):]
    return key.lower().replace("-", "_")


def _parse_dotenv(path: Path) -> Dict[str, str]:
    """KEY=value lines; '#' comments and blank lines are skipped."""
    out: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh.read().splitlines():
            line = raw.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip().strip('"').strip("'")
    return {k: _expand_variables(v, out) for k, v in out.items()}


def _parse_yaml(path: Path) -> Dict[str, Any]:
    try:
        import yaml
    except ImportError:
        raise ConfigurationError(
            f"Reading {path} needs PyYAML; install with: pip install adaresnet-mini[yaml]"
        )
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must hold a mapping of settings")
    return data


def read_config_file(path: Union[str, Path], strict: bool = False) -> Dict[str, Any]:
    """Settings from a dotenv-style or YAML config file, keyed by field name.

    Args:
        path: File path; ``.yaml``/``.yml`` files are read as YAML
        strict: Raise on unknown keys instead of warning

    Raises:
        ConfigurationError: Missing file, unknown key in strict mode, bad value
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    raw = _parse_yaml(path) if path.suffix.lower() in (".yaml", ".yml") else _parse_dotenv(path)

    out: Dict[str, Any] = {}
    for key, value in raw.items():
        name = _normalize_key(str(key))
        if name not in FIELD_TYPES:
            message = f"Unknown setting {key!r} in {path}"
            if strict:
                raise ConfigurationError(message)
            warnings.warn(message, UserWarning)
            continue
        out[name] = _cast_value(name, value, FIELD_TYPES[name])
    return out


def read_environment(environ: Mapping[str, str]) -> Dict[str, Any]:
    """Settings from ADARESNET_* variables that name a TrainConfig field."""
    out: Dict[str, Any] = {}
    for key, value in environ.items():
        if not key.upper().startswith(ENV_PREFIX):
            continue
        name = _normalize_key(key)
        if name in FIELD_TYPES:
            out[name] = _cast_value(key, value, FIELD_TYPES[name])
    return out


def resolve_config(
    cli: Optional[Mapping[str, Any]] = None,
    config_file: Optional[Union[str, Path]] = None,
    environ: Optional[Mapping[str, str]] = None,
    strict: bool = False,
) -> Tuple[TrainConfig, Dict[str, str]]:
    """Merge defaults < config file < ADARESNET_* environment < CLI flags.

    Args:
        cli: Explicit flag values; None entries count as not given
        config_file: Optional dotenv-style or YAML file
        environ: Environment mapping (os.environ when omitted)
        strict: Raise on unknown config-file keys instead of warning

    Returns:
        (validated TrainConfig, mapping of field name to winning source)

    Raises:
        ConfigurationError: On unknown CLI keys, bad values or invalid settings
    """
    environ = os.environ if environ is None else environ
    sources: Dict[str, Dict[str, Any]] = {"defaults": TrainConfig().to_dict()}
    if config_file is not None:
        sources["file"] = read_config_file(config_file, strict=strict)
    sources["system"] = read_environment(environ)

    cli_values: Dict[str, Any] = {}
    for key, value in (cli or {}).items():
        if value is None:
            continue
        if key not in FIELD_TYPES:
            raise ConfigurationError(f"Unknown setting {key!r}")
        cli_values[key] = _cast_value(key, value, FIELD_TYPES[key])
    sources["cli"] = cli_values

    tracer = Tracer()
    merged = ConfigurationMerger(tracer).merge(sources)
    config = TrainConfig(**merged)
    config.validate()
    return config, tracer.get_all_origins()
