"""Binary model checkpoints.

Layout (all integers little-endian)::

    8s   magic b"ADRNCKPT"
    u32  format version
    u32  header length, then UTF-8 JSON {"config": ..., "metadata": ...}
    u32  tensor count, then per tensor:
         u16 name length, name (UTF-8)
         u8  dtype tag (1 = float32, 2 = float64)
         u8  ndim, u32 * ndim dimensions
         payload, little-endian, row-major
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict, Optional, Tuple, Union

import numpy as np

from ..exceptions import CheckpointError, ConfigurationError
from .model import Model, ModelConfig

MAGIC = b"ADRNCKPT"
FORMAT_VERSION = 1

DTYPE_TAGS = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}
TAG_DTYPES = {tag: dtype for dtype, tag in DTYPE_TAGS.items()}


@dataclass
class Checkpoint:
    """A loaded model and the metadata stored next to it."""

    model: Model
    metadata: Dict[str, Any] = field(default_factory=dict)
    version: int = FORMAT_VERSION


def _write_tensor(f: BinaryIO, name: str, value: np.ndarray) -> None:
    dtype = np.dtype(value.dtype)
    if dtype not in DTYPE_TAGS:
        raise CheckpointError(f"Cannot store tensor {name!r} of dtype {dtype}")
    encoded = name.encode("utf-8")
    f.write(struct.pack("<H", len(encoded)))
    f.write(encoded)
    f.write(struct.pack("<BB", DTYPE_TAGS[dtype], value.ndim))
    if value.ndim:
        f.write(struct.pack(f"<{value.ndim}I", *value.shape))
    f.write(np.ascontiguousarray(value, dtype=dtype.newbyteorder("<")).tobytes())


def save_checkpoint(
    model: Model,
    path: Union[str, Path],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write the model's config, parameters and batch-norm buffers to path.

    Args:
        model: Model to store
        path: Destination file
        metadata: JSON-serializable extras (run config, final metrics)

    Returns:
        The written path
    """
    path = Path(path)
    header = json.dumps(
        {"config": model.config.to_dict(), "metadata": metadata or {}},
        sort_keys=True,
    ).encode("utf-8")
    state = model.state_dict()

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        f.write(header)
        f.write(struct.pack("<I", len(state)))
        for name, value in state.items():
            _write_tensor(f, name, value)
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise CheckpointError(
                f"Truncated checkpoint {self.path}: needed {size} bytes for {what} at offset {self.offset}"
            )
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Load a checkpoint with its metadata.

    Raises:
        CheckpointError: On bad magic, unsupported version, truncation or
            tensors that do not fit the stored config
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}")

    reader = _Reader(data, path)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    version, header_len = reader.unpack("<II", "header")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version} in {path}")
    try:
        header = json.loads(reader.take(header_len, "header").decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
    except (ValueError, KeyError, TypeError, ConfigurationError) as e:
        raise CheckpointError(f"Malformed checkpoint header in {path}: {e}")

    (count,) = reader.unpack("<I", "tensor count")
    state: Dict[str, np.ndarray] = {}
    dtype = None
    for _ in range(count):
        (name_len,) = reader.unpack("<H", "tensor name length")
        try:
            name = reader.take(name_len, "tensor name").decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(f"Tensor name is not UTF-8 in {path}: {e}")
        tag, ndim = reader.unpack("<BB", f"tensor {name} header")
        if tag not in TAG_DTYPES:
            raise CheckpointError(f"Unknown dtype tag {tag} for tensor {name!r} in {path}")
        shape = reader.unpack(f"<{ndim}I", f"tensor {name} shape") if ndim else ()
        tensor_dtype = TAG_DTYPES[tag].newbyteorder("<")
        size = int(np.prod(shape, dtype=np.int64)) * tensor_dtype.itemsize
        payload = reader.take(size, f"tensor {name} payload")
        state[name] = np.frombuffer(payload, dtype=tensor_dtype).reshape(shape)
        if dtype is None:
            dtype = TAG_DTYPES[tag]
    if reader.offset != len(data):
        raise CheckpointError(f"Trailing bytes after the last tensor in {path}")

    try:
        model = Model(config, np.float32 if dtype is None else dtype)
    except (KeyError, ConfigurationError) as e:
        raise CheckpointError(f"Checkpoint config in {path} does not build a model: {e}")
    model.load_state_dict(state)
    return Checkpoint(model, header.get("metadata", {}), version)


def load_checkpoint(path: Union[str, Path]) -> Model:
    """Load the model stored at path."""
    return read_checkpoint(path).model
