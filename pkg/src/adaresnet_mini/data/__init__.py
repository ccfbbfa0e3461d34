"""Dataset parsers, preprocessing and file discovery."""

from .cifar import encode_cifar10, load_cifar10, parse_cifar10
from .dataset import (
    Batch,
    Dataset,
    batches,
    num_batches,
    one_hot,
    pixels_to_bytes,
    subsample,
    synthetic_dataset,
)
from .idx import (
    encode_idx_images,
    encode_idx_labels,
    load_mnist,
    parse_idx_images,
    parse_idx_labels,
    read_idx_header,
)
from .sources import content_hash, dataset_files, load_dataset, resolve_data_dir, verify_checksums

__all__ = [
    "Batch",
    "Dataset",
    "batches",
    "content_hash",
    "dataset_files",
    "encode_cifar10",
    "encode_idx_images",
    "encode_idx_labels",
    "load_cifar10",
    "load_dataset",
    "load_mnist",
    "num_batches",
    "one_hot",
    "parse_cifar10",
    "parse_idx_images",
    "parse_idx_labels",
    "pixels_to_bytes",
    "read_idx_header",
    "resolve_data_dir",
    "subsample",
    "synthetic_dataset",
    "verify_checksums",
]
