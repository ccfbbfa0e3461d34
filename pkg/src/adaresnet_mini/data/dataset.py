"""In-memory datasets, one-hot targets, stratified subsampling and batching."""

from dataclasses import dataclass
from typing import Iterator, List

import numpy as np

from ..core.tensor import rng_for
from ..exceptions import ConfigurationError, LabelRangeError, SubsampleError
from ..settings import DEFAULT_DTYPE


@dataclass
class Dataset:
    """Images N×C×H×W scaled to [0, 1] with integer labels.

    Attributes:
        images: float32 pixels
        labels: int64 class indices
        name: Dataset name ("mnist", "cifar10", ...)
        num_classes: Number of classes K
        content_hash: SHA-256 of the source files ("" for synthetic data)
    """

    images: np.ndarray
    labels: np.ndarray
    name: str
    num_classes: int = 10
    content_hash: str = ""

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ConfigurationError(
                f"Dataset {self.name!r}: {len(self.images)} images but {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def input_shape(self):
        return tuple(self.images.shape[1:])

    def take(self, indices: np.ndarray) -> "Dataset":
        """Subset by index array, keeping name, classes and hash."""
        return Dataset(
            self.images[indices], self.labels[indices], self.name, self.num_classes, self.content_hash
        )


@dataclass
class Batch:
    images: np.ndarray
    labels: np.ndarray
    onehot: np.ndarray
    index: int


def pixels_to_unit(pixels: np.ndarray) -> np.ndarray:
    """uint8 pixels -> float32 in [0, 1] (v / 255)."""
    return pixels.astype(DEFAULT_DTYPE) / DEFAULT_DTYPE(255.0)


def pixels_to_bytes(images: np.ndarray) -> np.ndarray:
    """Inverse of pixels_to_unit, rounding back to uint8."""
    return np.rint(np.asarray(images, dtype=np.float64) * 255.0).astype(np.uint8)


def one_hot(labels: np.ndarray, num_classes: int, dtype=None) -> np.ndarray:
    """N×K matrix with a single 1 per row.

    Raises:
        LabelRangeError: If a label is outside [0, K)
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelRangeError(f"Labels must lie in [0, {num_classes}), got range [{labels.min()}, {labels.max()}]")
    out = np.zeros((len(labels), num_classes), dtype=DEFAULT_DTYPE if dtype is None else dtype)
    out[np.arange(len(labels)), labels] = 1
    return out


def subsample(ds: Dataset, n: int, seed: int) -> Dataset:
    """Stratified draw without replacement, n // K items of every class.

    Asking for the full size returns the full set. The remainder n % K is
    dropped. Selected indices keep their original order.

    Raises:
        SubsampleError: If n is out of range or a class has too few items
    """
    total = len(ds)
    if n < 1 or n > total:
        raise SubsampleError(f"Cannot draw {n} items from {ds.name!r} with {total} items")
    if n == total:
        return ds

    per_class = n // ds.num_classes
    if per_class == 0:
        raise SubsampleError(f"Subsample of {n} is smaller than the {ds.num_classes} classes")
    rng = rng_for(seed)
    chosen: List[np.ndarray] = []
    for label in range(ds.num_classes):
        members = np.flatnonzero(ds.labels == label)
        if len(members) < per_class:
            raise SubsampleError(
                f"Class {label} of {ds.name!r} has {len(members)} items, {per_class} requested"
            )
        chosen.append(rng.choice(members, size=per_class, replace=False))
    return ds.take(np.sort(np.concatenate(chosen)))


def batch_order(n: int, seed: int, epoch: int, shuffle: bool = True) -> np.ndarray:
    """Index order for one epoch, a pure function of (seed, epoch)."""
    if not shuffle:
        return np.arange(n)
    return rng_for(seed, epoch).permutation(n)


def batches(
    ds: Dataset,
    batch_size: int,
    seed: int = 0,
    epoch: int = 0,
    shuffle: bool = True,
    onehot_dtype=None,
) -> Iterator[Batch]:
    """Yield ceil(N / B) batches; the last one may be short."""
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be at least 1, got {batch_size}")
    order = batch_order(len(ds), seed, epoch, shuffle)
    for index, start in enumerate(range(0, len(order), batch_size)):
        idx = order[start:start + batch_size]
        labels = ds.labels[idx]
        yield Batch(ds.images[idx], labels, one_hot(labels, ds.num_classes, onehot_dtype), index)


def num_batches(n: int, batch_size: int) -> int:
    return -(-n // batch_size)


def synthetic_dataset(
    n: int,
    input_shape=(1, 28, 28),
    num_classes: int = 10,
    seed: int = 0,
    name: str = "synthetic",
) -> Dataset:
    """Random uint8-valued images with balanced labels, for smoke runs and tests.

    Each class gets a brighter square in a class-specific position so a small
    network can tell the classes apart.
    """
    rng = rng_for(seed)
    pixels = rng.integers(0, 64, size=(n, *input_shape), dtype=np.uint8)
    labels = np.arange(n, dtype=np.int64) % num_classes
    rng.shuffle(labels)
    _, h, w = input_shape
    side = max(h // 4, 1)
    cols = max(w // side, 1)
    for label in range(num_classes):
        row, col = divmod(label, cols)
        top, left = (row * side) % max(h - side + 1, 1), (col * side) % max(w - side + 1, 1)
        pixels[labels == label, :, top:top + side, left:left + side] = 255
    return Dataset(pixels_to_unit(pixels), labels, name, num_classes)


def describe(ds: Dataset) -> str:
    """One-line summary with per-class counts, for logs."""
    counts = np.bincount(ds.labels, minlength=ds.num_classes)
    return f"{ds.name}: {len(ds)} items, shape {ds.input_shape}, per class {counts.tolist()}"
