"""CIFAR-10 binary batch files: records of one label byte and 3072 pixel bytes."""

from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from ..exceptions import DatasetError, LabelRangeError, TruncatedPayloadError
from .dataset import Dataset, pixels_to_unit
from .idx import read_bytes

CIFAR_SHAPE = (3, 32, 32)
PIXELS_PER_RECORD = 3 * 32 * 32
RECORD_SIZE = 1 + PIXELS_PER_RECORD
CIFAR_CLASSES = 10


def parse_cifar10(data: bytes, source: str = "<bytes>") -> Tuple[np.ndarray, np.ndarray]:
    """Raw (uint8 pixels N×3×32×32, uint8 labels) from one batch file.

    Raises:
        TruncatedPayloadError: Length is not a multiple of the record size
        LabelRangeError: Label byte outside 0..9
    """
    if len(data) % RECORD_SIZE:
        raise TruncatedPayloadError(
            f"{source}: {len(data)} bytes is not a whole number of {RECORD_SIZE}-byte records"
        )
    records = np.frombuffer(data, dtype=np.uint8).reshape(-1, RECORD_SIZE)
    labels = records[:, 0]
    if labels.size and labels.max() >= CIFAR_CLASSES:
        bad = int(np.flatnonzero(labels >= CIFAR_CLASSES)[0])
        raise LabelRangeError(f"{source}: record {bad} has label {int(labels[bad])}, expected 0..9")
    return records[:, 1:].reshape(-1, *CIFAR_SHAPE), labels


def encode_cifar10(pixels: np.ndarray, labels: np.ndarray) -> bytes:
    """Serialize uint8 pixels N×3×32×32 (or N×3072) and labels as one batch file."""
    pixels = np.asarray(pixels, dtype=np.uint8).reshape(len(pixels), -1)
    labels = np.asarray(labels)
    if pixels.shape[1] != PIXELS_PER_RECORD or len(labels) != len(pixels):
        raise DatasetError(
            f"CIFAR-10 records need {PIXELS_PER_RECORD} pixels and one label each, "
            f"got pixels {pixels.shape} and {len(labels)} labels"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= CIFAR_CLASSES):
        raise LabelRangeError("CIFAR-10 labels must lie in 0..9")
    records = np.concatenate([labels.astype(np.uint8)[:, None], pixels], axis=1)
    return records.tobytes()


def load_cifar10(paths: Sequence[Union[str, Path]], name: str = "cifar10") -> Dataset:
    """Load and concatenate CIFAR-10 batch files in the given order."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if not paths:
        raise DatasetError("load_cifar10 needs at least one batch file")
    pixel_parts, label_parts = [], []
    for path in paths:
        pixels, labels = parse_cifar10(read_bytes(path), str(path))
        pixel_parts.append(pixels)
        label_parts.append(labels)
    pixels = np.concatenate(pixel_parts)
    labels = np.concatenate(label_parts).astype(np.int64)
    return Dataset(pixels_to_unit(pixels), labels, name, CIFAR_CLASSES)
