"""Tests for multi-round mode comparison."""
import hashlib
import json
import os
import sys
from dataclasses import replace

import numpy as np
import pytest

# Add src to path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from adaresnet_mini.analysis.variance import read_weight_matrix, variance_report
from adaresnet_mini.data.dataset import synthetic_dataset
from adaresnet_mini.exceptions import ConfigurationError
from adaresnet_mini.experiment import Comparison, MetricsRecord, RunOutcome, TrainConfig, WeightReport, compare_modes
from adaresnet_mini.experiment.artifacts import read_header_lines
from adaresnet_mini.nn.modes import parse_mode

REAL_DATA = os.environ.get("ADARESNET_DATA_DIR")
TRAIN = synthetic_dataset(30, (1, 8, 8), seed=1)
TEST = synthetic_dataset(10, (1, 8, 8), seed=2)


def _base(tmp_path, **changes):
    base = TrainConfig(
        subsample=0,
        test_subsample=0,
        epochs=1,
        batch_size=10,
        lr=0.01,
        seed=10,
        out_dir=str(tmp_path / "cmp"),
    )
    return base.replace(**changes)


def _outcome(mode, round_index, acc, weights=None):
    return RunOutcome(
        mode=mode,
        round=round_index,
        seed=round_index,
        metrics=[MetricsRecord(1, 1.0, acc, acc)],
        sites=["a", "b"],
        weights=weights or [1.0, 1.0],
    )


def test_compare_writes_tables_and_runs(tmp_path):
    comparison = compare_modes(_base(tmp_path), ["fixed:1", "unified"], rounds=2, train_set=TRAIN, test_set=TEST)
    out = tmp_path / "cmp"

    for name in ("accuracy.csv", "weights_fixed-1.csv", "weights_unified.csv", "summary.txt"):
        assert (out / name).is_file(), name
    for slug in ("fixed-1", "unified"):
        for r in (1, 2):
            assert (out / slug / f"round_{r}" / "metrics.csv").is_file()

    assert [run.seed for run in comparison.runs("unified")] == [11, 12]
    report = WeightReport.read(out / "weights_unified.csv")
    assert len(report.sites) == 6
    assert all(len(row) == 2 for row in report.rows())
    # one unified weight shared by every site
    assert all(len(set(col)) == 1 for col in zip(*report.rows()))


def test_accuracy_table_rows(tmp_path):
    compare_modes(_base(tmp_path, epochs=2), ["fixed:1"], rounds=2, train_set=TRAIN, test_set=TEST)
    lines = (tmp_path / "cmp" / "accuracy.csv").read_text().splitlines()
    body = [line for line in lines if not line.startswith("#")]
    assert body[0] == "mode,round,seed,epoch,train_loss,train_acc,test_acc"
    assert [row.split(",")[:4] for row in body[1:]] == [
        ["fixed:1", "1", "11", "1"],
        ["fixed:1", "1", "11", "2"],
        ["fixed:1", "2", "12", "1"],
        ["fixed:1", "2", "12", "2"],
    ]


def test_round_matches_single_run(tmp_path):
    """Round r of a comparison equals a standalone run with seed base + r."""
    from adaresnet_mini.experiment import train

    compare_modes(_base(tmp_path), ["per-type"], rounds=1, train_set=TRAIN, test_set=TEST)
    single = _base(tmp_path, mode="per-type", seed=11, out_dir=str(tmp_path / "single"))
    train(single, TRAIN, TEST)
    assert (tmp_path / "cmp" / "per-type" / "round_1" / "weights.csv").read_bytes() == (
        tmp_path / "single" / "weights.csv"
    ).read_bytes()


def test_improvement_relative_to_baseline(tmp_path):
    comparison = Comparison(_base(tmp_path), [parse_mode("fixed:1"), parse_mode("unified")], rounds=2)
    comparison.outcomes[("fixed:1", 1)] = _outcome("fixed:1", 1, 0.4)
    comparison.outcomes[("fixed:1", 2)] = _outcome("fixed:1", 2, 0.6)
    comparison.outcomes[("unified", 1)] = _outcome("unified", 1, 0.5, [0.2, 0.2])
    comparison.outcomes[("unified", 2)] = _outcome("unified", 2, 0.7, [0.4, 0.4])

    assert comparison.mean_accuracy("fixed:1") == pytest.approx(0.5)
    assert comparison.improvement("unified") == pytest.approx(0.2)
    assert comparison.improvement("fixed:1") == pytest.approx(0.0)
    assert comparison.weight_report("unified").rows() == [[0.2, 0.4], [0.2, 0.4]]

    summary = "\n".join(comparison.summary_lines())
    assert "+20.00%" in summary
    assert "baseline mean test_acc" in summary


def test_improvement_without_baseline(tmp_path):
    comparison = Comparison(_base(tmp_path), [parse_mode("unified")], rounds=1)
    comparison.outcomes[("unified", 1)] = _outcome("unified", 1, 0.5)
    assert comparison.improvement("unified") is None
    assert "no fixed:1 baseline" in "\n".join(comparison.summary_lines())


def test_improvement_with_zero_baseline(tmp_path):
    comparison = Comparison(_base(tmp_path), [parse_mode("fixed:1"), parse_mode("unified")], rounds=1)
    comparison.outcomes[("fixed:1", 1)] = _outcome("fixed:1", 1, 0.0)
    comparison.outcomes[("unified", 1)] = _outcome("unified", 1, 0.5)
    assert comparison.improvement("unified") is None


def test_comparison_header_records_modes(tmp_path):
    comparison = Comparison(_base(tmp_path), [parse_mode("fixed:2")], rounds=3)
    header = comparison.header_lines()
    assert header[0].startswith("# config=")
    assert '"modes":["fixed:2"]' in header[0]
    assert '"base_seed":10' in header[0]
    assert '"out_dir"' not in header[0]


@pytest.mark.parametrize("modes,rounds,workers,message", [
    ([], 1, 1, "at least one mode"),
    (["unified", "unified"], 1, 1, "Duplicate"),
    (["unified"], 0, 1, "rounds"),
    (["unified"], 1, 0, "workers"),
])
def test_compare_rejects_bad_arguments(tmp_path, modes, rounds, workers, message):
    with pytest.raises(ConfigurationError, match=message):
        compare_modes(_base(tmp_path), modes, rounds=rounds, workers=workers, train_set=TRAIN, test_set=TEST)


@pytest.mark.slow
def test_parallel_workers_match_serial(tmp_path):
    compare_modes(_base(tmp_path), ["fixed:1", "per-block"], rounds=2, train_set=TRAIN, test_set=TEST)
    parallel = _base(tmp_path, out_dir=str(tmp_path / "parallel"))
    compare_modes(parallel, ["fixed:1", "per-block"], rounds=2, workers=2, train_set=TRAIN, test_set=TEST)
    for name in ("weights_fixed-1.csv", "weights_per-block.csv"):
        assert (tmp_path / "cmp" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()


def test_comparison_files_embed_config_and_dataset_hash(tmp_path):
    train_set = replace(TRAIN, content_hash="a" * 64)
    test_set = replace(TEST, content_hash="b" * 64)
    comparison = compare_modes(_base(tmp_path), ["fixed:1", "per-block"], rounds=2, train_set=train_set, test_set=test_set)
    out = tmp_path / "cmp"
    # manifest hashes are combined in key order: test, then train
    expected = hashlib.sha256(("b" * 64 + "," + "a" * 64).encode("ascii")).hexdigest()

    headers = read_header_lines(out / "weights_per-block.csv")
    config = json.loads(headers["config"])
    assert headers["dataset_sha256"] == expected
    assert config["mode"] == "per-block"
    assert config["seeds"] == [11, 12]
    assert config["rounds"] == 2
    for key, value in _base(tmp_path).embedded().items():
        if key not in ("mode", "seed"):
            assert config[key] == value, key

    summary = read_header_lines(out / "summary.txt")
    summary_config = json.loads(summary["config"])
    assert summary["dataset_sha256"] == expected
    assert summary_config["modes"] == ["fixed:1", "per-block"]
    assert summary_config["base_seed"] == 10
    assert "mode" not in summary_config
    assert "  ".join(["mode", "round_1", "round_2", "mean", "improvement"]) in (out / "summary.txt").read_text()
    assert comparison.runs("per-block")[0].dataset_sha256 == expected


@pytest.mark.slow
@pytest.mark.skipif(not REAL_DATA, reason="ADARESNET_DATA_DIR not set")
def test_learned_modes_on_real_data(tmp_path):
    """MNIST and CIFAR-10, 5000/1000 images, 5 epochs of Adam, three rounds."""
    modes = ["fixed:1", "unified", "per-type", "per-block"]
    per_block = {}
    for dataset in ("mnist", "cifar10"):
        base = TrainConfig(
            dataset=dataset,
            data_dir=REAL_DATA,
            subsample=5000,
            test_subsample=1000,
            epochs=5,
            batch_size=64,
            optimizer="adam",
            lr=0.001,
            out_dir=str(tmp_path / dataset),
        )
        comparison = compare_modes(base, modes, rounds=3)
        if dataset == "mnist":
            baseline = comparison.mean_accuracy("fixed:1")
            for mode in ("unified", "per-type", "per-block"):
                assert comparison.mean_accuracy(mode) >= baseline - 0.02, mode
            for column in zip(*comparison.weight_report("per-block").rows()):
                assert np.std(column) > 0.01
        per_block[dataset] = read_weight_matrix(tmp_path / dataset / "weights_per-block.csv")

    report = variance_report(per_block["mnist"], per_block["cifar10"])
    assert report.between_exceeds_within, report.to_text()
