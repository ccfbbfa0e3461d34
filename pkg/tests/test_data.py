"""Tests for dataset parsing, subsampling, batching and file discovery."""
import gzip
import hashlib
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

# Add src to path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from adaresnet_mini.core.tensor import rng_for
from adaresnet_mini.data import (
    batches,
    content_hash,
    dataset_files,
    encode_cifar10,
    encode_idx_images,
    encode_idx_labels,
    load_cifar10,
    load_dataset,
    load_mnist,
    num_batches,
    one_hot,
    parse_cifar10,
    parse_idx_images,
    pixels_to_bytes,
    resolve_data_dir,
    subsample,
    synthetic_dataset,
    verify_checksums,
)
from adaresnet_mini.data.cifar import RECORD_SIZE
from adaresnet_mini.exceptions import (
    BadMagicError,
    ChecksumError,
    CountMismatchError,
    DatasetError,
    DatasetParseError,
    LabelRangeError,
    SubsampleError,
    TruncatedPayloadError,
)

REAL_DATA = os.environ.get("ADARESNET_DATA_DIR")


def _pixels(n, shape, seed=0):
    return rng_for(seed).integers(0, 256, size=(n, *shape), dtype=np.uint8)


def _write_mnist(root, n_train=20, n_test=10, gz=False):
    """Write a tiny MNIST-shaped data set under root/mnist."""
    folder = root / "mnist"
    folder.mkdir(parents=True, exist_ok=True)
    files = {
        "train-images-idx3-ubyte": encode_idx_images(_pixels(n_train, (28, 28), 1)),
        "train-labels-idx1-ubyte": encode_idx_labels(np.arange(n_train) % 10),
        "t10k-images-idx3-ubyte": encode_idx_images(_pixels(n_test, (28, 28), 2)),
        "t10k-labels-idx1-ubyte": encode_idx_labels(np.arange(n_test) % 10),
    }
    for name, data in files.items():
        if gz:
            with gzip.open(folder / f"{name}.gz", "wb") as f:
                f.write(data)
        else:
            (folder / name).write_bytes(data)
    return folder


def test_idx_round_trip(tmp_path):
    """Encoded IDX files load back to the same pixels and labels."""
    pixels = _pixels(5, (28, 28))
    labels = np.array([0, 9, 3, 3, 7])
    (tmp_path / "img").write_bytes(encode_idx_images(pixels))
    (tmp_path / "lbl").write_bytes(encode_idx_labels(labels))

    ds = load_mnist(tmp_path / "img", tmp_path / "lbl")
    assert ds.images.shape == (5, 1, 28, 28)
    assert ds.images.dtype == np.float32
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0
    assert_allclose(ds.images[:, 0], pixels / 255.0, rtol=1e-6)
    assert_array_equal(ds.labels, labels)
    assert_array_equal(pixels_to_bytes(ds.images)[:, 0], pixels)


def test_idx_encode_is_byte_exact():
    pixels = _pixels(3, (4, 5))
    data = encode_idx_images(pixels)
    assert data[:4] == b"\x00\x00\x08\x03"
    assert len(data) == 16 + 3 * 4 * 5
    assert encode_idx_images(parse_idx_images(data)) == data


def test_idx_gzip(tmp_path):
    folder = _write_mnist(tmp_path, gz=True)
    ds = load_mnist(folder / "train-images-idx3-ubyte.gz", folder / "train-labels-idx1-ubyte.gz")
    assert len(ds) == 20


def test_idx_bad_magic(tmp_path):
    (tmp_path / "lbl").write_bytes(encode_idx_labels([1, 2]))
    with pytest.raises(BadMagicError, match="0x00000801"):
        load_mnist(tmp_path / "lbl", tmp_path / "lbl")


def test_idx_truncated_payload():
    data = encode_idx_images(_pixels(2, (3, 3)))
    with pytest.raises(TruncatedPayloadError):
        parse_idx_images(data[:-1])
    with pytest.raises(TruncatedPayloadError):
        parse_idx_images(data[:10])


def test_idx_trailing_bytes():
    data = encode_idx_images(_pixels(2, (3, 3)))
    with pytest.raises(DatasetParseError, match="trailing"):
        parse_idx_images(data + b"\x00")


def test_idx_count_mismatch(tmp_path):
    (tmp_path / "img").write_bytes(encode_idx_images(_pixels(3, (28, 28))))
    (tmp_path / "lbl").write_bytes(encode_idx_labels([1, 2]))
    with pytest.raises(CountMismatchError, match="3 images"):
        load_mnist(tmp_path / "img", tmp_path / "lbl")


def test_idx_label_range(tmp_path):
    (tmp_path / "img").write_bytes(encode_idx_images(_pixels(2, (28, 28))))
    (tmp_path / "lbl").write_bytes(encode_idx_labels([1, 12]))
    with pytest.raises(LabelRangeError):
        load_mnist(tmp_path / "img", tmp_path / "lbl")


def test_cifar_round_trip(tmp_path):
    pixels = _pixels(4, (3, 32, 32))
    labels = np.array([0, 1, 9, 5])
    data = encode_cifar10(pixels, labels)
    assert len(data) == 4 * RECORD_SIZE == 4 * 3073
    parsed_pixels, parsed_labels = parse_cifar10(data)
    assert_array_equal(parsed_pixels, pixels)
    assert_array_equal(parsed_labels, labels)
    assert encode_cifar10(parsed_pixels, parsed_labels) == data


def test_cifar_multiple_files_keep_order(tmp_path):
    (tmp_path / "a.bin").write_bytes(encode_cifar10(_pixels(2, (3, 32, 32), 1), [1, 2]))
    (tmp_path / "b.bin").write_bytes(encode_cifar10(_pixels(3, (3, 32, 32), 2), [3, 4, 5]))
    ds = load_cifar10([tmp_path / "a.bin", tmp_path / "b.bin"])
    assert ds.images.shape == (5, 3, 32, 32)
    assert_array_equal(ds.labels, [1, 2, 3, 4, 5])


def test_cifar_malformed():
    data = encode_cifar10(_pixels(2, (3, 32, 32)), [1, 2])
    with pytest.raises(TruncatedPayloadError, match="3073"):
        parse_cifar10(data[:-1])
    bad = bytearray(data)
    bad[RECORD_SIZE] = 10
    with pytest.raises(LabelRangeError, match="record 1"):
        parse_cifar10(bytes(bad))


def test_one_hot():
    out = one_hot(np.array([2, 0]), 3)
    assert_array_equal(out, [[0, 0, 1], [1, 0, 0]])
    assert out.dtype == np.float32
    with pytest.raises(LabelRangeError):
        one_hot(np.array([3]), 3)


def test_subsample_is_stratified_and_sorted():
    ds = synthetic_dataset(200, (1, 8, 8), seed=0)
    small = subsample(ds, 50, seed=3)
    assert len(small) == 50
    assert_array_equal(np.bincount(small.labels, minlength=10), [5] * 10)
    again = subsample(ds, 50, seed=3)
    assert_array_equal(small.images, again.images)
    other = subsample(ds, 50, seed=4)
    assert not np.array_equal(small.images, other.images)


def test_subsample_drops_remainder_and_full_size():
    ds = synthetic_dataset(100, (1, 8, 8))
    assert len(subsample(ds, 57, seed=0)) == 50
    assert subsample(ds, 100, seed=0) is ds


def test_subsample_errors():
    ds = synthetic_dataset(30, (1, 8, 8))
    with pytest.raises(SubsampleError):
        subsample(ds, 31, seed=0)
    with pytest.raises(SubsampleError, match="smaller than"):
        subsample(ds, 5, seed=0)
    unbalanced = ds.take(np.flatnonzero(ds.labels != 0))
    with pytest.raises(SubsampleError, match="Class 0"):
        subsample(unbalanced, 20, seed=0)


def test_batches_cover_dataset():
    ds = synthetic_dataset(10, (1, 8, 8))
    out = list(batches(ds, 4, seed=1, epoch=1))
    assert [len(b.labels) for b in out] == [4, 4, 2]
    assert num_batches(10, 4) == 3
    assert [b.index for b in out] == [0, 1, 2]
    assert sorted(np.concatenate([b.labels for b in out]).tolist()) == sorted(ds.labels.tolist())
    assert out[0].onehot.shape == (4, 10)


def test_batch_order_depends_on_seed_and_epoch():
    ds = synthetic_dataset(50, (1, 8, 8))

    def order(seed, epoch, shuffle=True):
        return np.concatenate([b.images[:, 0, 0, 0] for b in batches(ds, 7, seed, epoch, shuffle)])

    assert_array_equal(order(1, 1), order(1, 1))
    assert not np.array_equal(order(1, 1), order(1, 2))
    assert not np.array_equal(order(1, 1), order(2, 1))
    assert_array_equal(order(1, 1, shuffle=False), ds.images[:, 0, 0, 0])


def test_synthetic_dataset_is_balanced():
    ds = synthetic_dataset(40, (3, 32, 32), num_classes=10, seed=1)
    assert ds.images.shape == (40, 3, 32, 32)
    assert_array_equal(np.bincount(ds.labels), [4] * 10)
    assert ds.content_hash == ""


def test_resolve_data_dir():
    assert str(resolve_data_dir("/cli", {"ADARESNET_DATA_DIR": "/env"})) == "/cli"
    assert str(resolve_data_dir(None, {"ADARESNET_DATA_DIR": "/env"})) == "/env"
    assert str(resolve_data_dir(None, {})) == "data"


def test_dataset_files_searches_subdirectories(tmp_path):
    _write_mnist(tmp_path, gz=True)
    paths = dataset_files("mnist", tmp_path, "train")
    assert [p.name for p in paths] == ["train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"]
    assert len(dataset_files("mnist", tmp_path)) == 4


def test_dataset_files_missing(tmp_path):
    with pytest.raises(DatasetError, match="test_batch.bin"):
        dataset_files("cifar10", tmp_path, "test")


def test_load_dataset_sets_content_hash(tmp_path):
    _write_mnist(tmp_path)
    ds = load_dataset("mnist", tmp_path, "test")
    assert len(ds) == 10
    assert ds.content_hash == content_hash(dataset_files("mnist", tmp_path, "test"))
    assert len(ds.content_hash) == 64


def test_content_hash_tracks_bytes(tmp_path):
    (tmp_path / "a").write_bytes(b"abc")
    (tmp_path / "b").write_bytes(b"def")
    assert content_hash([tmp_path / "a", tmp_path / "b"]) == hashlib.sha256(b"abcdef").hexdigest()
    (tmp_path / "b").write_bytes(b"deg")
    assert content_hash([tmp_path / "a", tmp_path / "b"]) != hashlib.sha256(b"abcdef").hexdigest()


def test_verify_checksums(tmp_path):
    folder = _write_mnist(tmp_path)
    assert verify_checksums(tmp_path) == {}

    name = "mnist/t10k-labels-idx1-ubyte"
    digest = hashlib.sha256((folder / "t10k-labels-idx1-ubyte").read_bytes()).hexdigest()
    (tmp_path / "SHA256SUMS").write_text(f"{digest}  {name}\n")
    assert verify_checksums(tmp_path) == {name: digest}
    load_dataset("mnist", tmp_path, "test")

    (folder / "t10k-labels-idx1-ubyte").write_bytes(encode_idx_labels(np.zeros(10, dtype=np.uint8)))
    with pytest.raises(ChecksumError, match="mismatch"):
        verify_checksums(tmp_path)
    with pytest.raises(ChecksumError):
        load_dataset("mnist", tmp_path, "test")
    # unverified split is unaffected
    load_dataset("mnist", tmp_path, "train")


@pytest.mark.skipif(not REAL_DATA, reason="ADARESNET_DATA_DIR not set")
def test_real_mnist_test_split():
    ds = load_dataset("mnist", REAL_DATA, "test")
    assert ds.images.shape == (10000, 1, 28, 28)
    assert_array_equal(np.bincount(ds.labels) > 0, [True] * 10)


@pytest.mark.skipif(not REAL_DATA, reason="ADARESNET_DATA_DIR not set")
def test_real_cifar10_test_split():
    ds = load_dataset("cifar10", REAL_DATA, "test")
    assert ds.images.shape == (10000, 3, 32, 32)
