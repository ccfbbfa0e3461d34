"""MNIST IDX files.

Big-endian layout::

    u32  magic (0x00000803 images, 0x00000801 labels)
    u32  item count
    u32  rows, u32 columns (images only)
    u8[] payload, row-major
"""

import gzip
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..exceptions import (
    BadMagicError,
    CountMismatchError,
    DatasetError,
    DatasetParseError,
    LabelRangeError,
    TruncatedPayloadError,
)
from .dataset import Dataset, pixels_to_unit

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
MNIST_CLASSES = 10


def read_bytes(path: Union[str, Path]) -> bytes:
    """File contents, transparently decompressing ``.gz`` files."""
    path = Path(path)
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as f:
                return f.read()
        return path.read_bytes()
    except OSError as e:
        raise DatasetError(f"Cannot read dataset file {path}: {e}")


def read_idx_header(data: bytes, expected_magic: int, source: str = "<bytes>") -> Tuple[int, ...]:
    """Validate the magic number and return the dimension sizes.

    Raises:
        BadMagicError: If the magic number differs from expected_magic
        TruncatedPayloadError: If the header is incomplete
    """
    if len(data) < 4:
        raise TruncatedPayloadError(f"{source}: {len(data)} bytes is too short for an IDX magic number")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise BadMagicError(f"{source}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header_size = 4 + 4 * ndim
    if len(data) < header_size:
        raise TruncatedPayloadError(f"{source}: header needs {header_size} bytes, file has {len(data)}")
    return struct.unpack(f">{ndim}I", data[4:header_size])


def _payload(data: bytes, dims: Tuple[int, ...], source: str) -> np.ndarray:
    offset = 4 + 4 * len(dims)
    expected = int(np.prod(dims, dtype=np.int64))
    available = len(data) - offset
    if available < expected:
        raise TruncatedPayloadError(f"{source}: payload has {available} bytes, header declares {expected}")
    if available > expected:
        raise DatasetParseError(f"{source}: {available - expected} trailing bytes after the payload")
    return np.frombuffer(data, dtype=np.uint8, offset=offset).reshape(dims)


def parse_idx_images(data: bytes, source: str = "<bytes>") -> np.ndarray:
    """Raw uint8 pixels N×rows×cols."""
    dims = read_idx_header(data, IMAGES_MAGIC, source)
    return _payload(data, dims, source)


def parse_idx_labels(data: bytes, source: str = "<bytes>") -> np.ndarray:
    """Raw uint8 labels of length N."""
    dims = read_idx_header(data, LABELS_MAGIC, source)
    return _payload(data, dims, source)


def encode_idx_images(pixels: np.ndarray) -> bytes:
    """Serialize uint8 pixels N×rows×cols (or N×1×rows×cols) as IDX."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    if pixels.ndim == 4 and pixels.shape[1] == 1:
        pixels = pixels[:, 0]
    if pixels.ndim != 3:
        raise DatasetParseError(f"IDX images must be N×rows×cols, got shape {pixels.shape}")
    return struct.pack(">4I", IMAGES_MAGIC, *pixels.shape) + pixels.tobytes()


def encode_idx_labels(labels: np.ndarray) -> bytes:
    """Serialize labels (0..255) as IDX."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise LabelRangeError("IDX labels must fit in one unsigned byte")
    return struct.pack(">2I", LABELS_MAGIC, len(labels)) + labels.astype(np.uint8).tobytes()


def load_mnist(images_path: Union[str, Path], labels_path: Union[str, Path], name: str = "mnist") -> Dataset:
    """Load an MNIST image/label file pair as a Dataset of 1×28×28 images.

    Raises:
        BadMagicError: Wrong file kind
        TruncatedPayloadError: Short payload
        CountMismatchError: Image and label counts differ
        LabelRangeError: Label outside 0..9
    """
    pixels = parse_idx_images(read_bytes(images_path), str(images_path))
    labels = parse_idx_labels(read_bytes(labels_path), str(labels_path))
    if len(pixels) != len(labels):
        raise CountMismatchError(
            f"{images_path} holds {len(pixels)} images but {labels_path} holds {len(labels)} labels"
        )
    if labels.size and labels.max() >= MNIST_CLASSES:
        raise LabelRangeError(f"{labels_path}: label {int(labels.max())} outside 0..{MNIST_CLASSES - 1}")
    return Dataset(pixels_to_unit(pixels)[:, None, :, :], labels.astype(np.int64), name, MNIST_CLASSES)
