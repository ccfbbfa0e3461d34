"""Dataset file discovery, content hashing and checksum verification."""

import hashlib
import os
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

from ..exceptions import ChecksumError, ConfigurationError, DatasetError
from ..settings import CHECKSUM_MANIFEST, DEFAULT_DATA_DIR, ENV_DATA_DIR
from ..utils.logging import get_logger
from .cifar import load_cifar10
from .dataset import Dataset
from .idx import load_mnist

DATASETS = ("mnist", "cifar10")
SPLITS = ("train", "test")

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR_FILES = {
    "train": tuple(f"data_batch_{i}.bin" for i in range(1, 6)),
    "test": ("test_batch.bin",),
}
# Searched below the data root before the root itself
SUBDIRS = {"mnist": ("mnist",), "cifar10": ("cifar-10-batches-bin", "cifar10")}


def resolve_data_dir(cli_value: Optional[str] = None, environ: Optional[Mapping[str, str]] = None) -> Path:
    """Dataset root: --data-dir, then ADARESNET_DATA_DIR, then ./data."""
    environ = os.environ if environ is None else environ
    if cli_value:
        return Path(cli_value)
    if environ.get(ENV_DATA_DIR):
        return Path(environ[ENV_DATA_DIR])
    return Path(DEFAULT_DATA_DIR)


def _check_name(name: str) -> str:
    key = name.strip().lower().replace("-", "")
    if key not in DATASETS:
        raise ConfigurationError(f"Unknown dataset {name!r}; expected one of {', '.join(DATASETS)}")
    return key


def _locate(data_dir: Path, dataset: str, filename: str) -> Path:
    roots = [data_dir / sub for sub in SUBDIRS[dataset]] + [data_dir]
    for root in roots:
        for candidate in (root / filename, root / f"{filename}.gz"):
            if candidate.is_file():
                return candidate
    searched = ", ".join(str(r) for r in roots)
    raise DatasetError(f"Dataset file {filename} (or {filename}.gz) not found under {searched}")


def dataset_files(name: str, data_dir: Union[str, Path], split: Optional[str] = None) -> List[Path]:
    """Paths of a dataset's files for one split, or for both when split is None.

    Raises:
        DatasetError: If a file is missing
    """
    key = _check_name(name)
    splits = SPLITS if split is None else (split,)
    table = MNIST_FILES if key == "mnist" else CIFAR_FILES
    paths: List[Path] = []
    for s in splits:
        if s not in table:
            raise ConfigurationError(f"Unknown split {s!r}; expected one of {', '.join(SPLITS)}")
        paths.extend(_locate(Path(data_dir), key, filename) for filename in table[s])
    return paths


def _feed(digest, path: Union[str, Path]) -> None:
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 of the file as stored on disk."""
    digest = hashlib.sha256()
    _feed(digest, path)
    return digest.hexdigest()


def content_hash(paths: Sequence[Union[str, Path]]) -> str:
    """SHA-256 over the stored bytes of paths, in order."""
    digest = hashlib.sha256()
    for path in paths:
        _feed(digest, path)
    return digest.hexdigest()


def read_manifest(path: Union[str, Path]) -> Dict[str, str]:
    """Parse ``sha256sum`` output: ``<hex>  <relative path>`` per line."""
    entries: Dict[str, str] = {}
    for line_num, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2 or len(parts[0]) != 64:
            raise ChecksumError(f"{path}:{line_num}: malformed checksum line")
        entries[parts[1].lstrip("*").strip()] = parts[0].lower()
    return entries


def verify_checksums(data_dir: Union[str, Path], paths: Optional[Sequence[Path]] = None) -> Dict[str, str]:
    """Check files against the SHA256SUMS manifest in data_dir, if present.

    Args:
        data_dir: Dataset root holding the optional manifest
        paths: Only verify these files (all manifest entries when omitted)

    Returns:
        Mapping of verified relative path to digest (empty without a manifest)

    Raises:
        ChecksumError: On a digest mismatch or a listed file that is missing
    """
    data_dir = Path(data_dir)
    manifest_path = data_dir / CHECKSUM_MANIFEST
    if not manifest_path.is_file():
        get_logger().debug("No checksum manifest found", data_dir=str(data_dir))
        return {}

    entries = read_manifest(manifest_path)
    if paths is not None:
        wanted = {Path(p).resolve() for p in paths}
        entries = {rel: h for rel, h in entries.items() if (data_dir / rel).resolve() in wanted}

    verified: Dict[str, str] = {}
    for rel, expected in entries.items():
        target = data_dir / rel
        if not target.is_file():
            raise ChecksumError(f"{CHECKSUM_MANIFEST} lists {rel} but it does not exist under {data_dir}")
        actual = file_digest(target)
        if actual != expected:
            raise ChecksumError(f"Checksum mismatch for {rel}: expected {expected}, got {actual}")
        verified[rel] = actual
    get_logger().debug("Verified dataset checksums", files=len(verified))
    return verified


def load_dataset(name: str, data_dir: Union[str, Path], split: str, verify: bool = True) -> Dataset:
    """Load the standard files of a dataset split.

    Args:
        name: "mnist" or "cifar10"
        data_dir: Dataset root
        split: "train" or "test"
        verify: Check files against SHA256SUMS when the manifest exists

    Returns:
        Dataset with content_hash set to the SHA-256 of its files
    """
    key = _check_name(name)
    paths = dataset_files(key, data_dir, split)
    if verify:
        verify_checksums(data_dir, paths)
    if key == "mnist":
        ds = load_mnist(paths[0], paths[1], name=key)
    else:
        ds = load_cifar10(paths, name=key)
    ds.content_hash = content_hash(paths)
    get_logger().info("Loaded dataset", dataset=key, split=split, items=len(ds))
    return ds
