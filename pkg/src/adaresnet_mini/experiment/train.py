"""The training loop: forward, loss, backward and update per batch."""

import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core import autograd as ag
from ..core import tensor as T
from ..data.dataset import Dataset, batches, describe, subsample
from ..data.sources import load_dataset
from ..exceptions import ConfigurationError, NumericDivergenceError
from ..nn.checkpoint import save_checkpoint
from ..nn.model import Model, ModelConfig, SkipWeight, build_model, extract_skip_weights
from ..optim import build_optimizer
from ..settings import CHECKPOINT_FILE, MANIFEST_FILE, METRICS_FILE, SUMMARY_FILE, WEIGHTS_FILE
from ..utils.logging import RunLogger, get_logger
from .artifacts import MetricsRecord, MetricsWriter, RunManifest, WeightReport, format_origins, write_summary
from .config import TrainConfig
from .timing import EpochTimer


@dataclass
class TrainResult:
    """Outcome of one run."""

    model: Model
    metrics: List[MetricsRecord]
    weights: List[SkipWeight]
    manifest: RunManifest
    out_dir: Path

    @property
    def weight_row(self) -> List[float]:
        return [w.value for w in self.weights]

    @property
    def final_test_acc(self) -> float:
        return self.metrics[-1].test_acc


def _limit(ds: Dataset, n: int, seed: int, logger: RunLogger) -> Dataset:
    if n <= 0 or n == len(ds):
        return ds
    if n > len(ds):
        logger.warning("Subsample larger than dataset, using all items", dataset=ds.name, requested=n, available=len(ds))
        return ds
    return subsample(ds, n, seed)


def prepare_data(
    config: TrainConfig,
    train_set: Optional[Dataset] = None,
    test_set: Optional[Dataset] = None,
    logger: Optional[RunLogger] = None,
) -> Tuple[Dataset, Dataset]:
    """Load (when not given) and subsample the train and test sets."""
    logger = logger or get_logger()
    if train_set is None:
        train_set = load_dataset(config.dataset, config.data_dir, "train")
    if test_set is None:
        test_set = load_dataset(config.dataset, config.data_dir, "test")
    train_set = _limit(train_set, config.subsample, config.seed, logger)
    test_set = _limit(test_set, config.test_subsample, config.seed, logger)
    if len(train_set) == 0:
        raise ConfigurationError(f"Training set {train_set.name!r} is empty")
    logger.debug(describe(train_set))
    logger.debug(describe(test_set))
    return train_set, test_set


def model_config_for(config: TrainConfig, ds: Dataset) -> ModelConfig:
    """The mini architecture sized for a dataset."""
    return ModelConfig.mini(
        input_shape=ds.input_shape,
        num_classes=ds.num_classes,
        mode=config.mode,
        init_weight=config.init_weight,
        seed=config.seed,
        plain_residual=config.plain_residual,
    )


def evaluate(model: Model, ds: Dataset, batch_size: int) -> float:
    """Inference-mode accuracy on a dataset."""
    if len(ds) == 0:
        return 0.0
    return T.accuracy(model.predict(ds.images, batch_size), ds.labels)


def train_epoch(
    model: Model,
    optimizer,
    ds: Dataset,
    config: TrainConfig,
    epoch: int,
    timer: EpochTimer,
    logger: RunLogger,
) -> Tuple[float, float]:
    """One pass over shuffled batches; returns (mean loss, running accuracy)."""
    params = model.trainable()
    loss_sum = 0.0
    correct = 0
    for batch in batches(ds, config.batch_size, seed=config.seed, epoch=epoch):
        timer.begin("forward")
        logits = model.forward(batch.images, training=True)
        loss = ag.softmax_cross_entropy(logits, batch.onehot)
        timer.end("forward")

        value = float(loss.value)
        if not math.isfinite(value):
            logger.log_divergence(epoch, batch.index, value)
            raise NumericDivergenceError("Non-finite training loss", epoch=epoch, batch=batch.index)

        timer.begin("backward")
        grads = ag.backward(loss, params)
        timer.end("backward")
        timer.begin("update")
        optimizer.step(grads)
        timer.end("update")

        loss_sum += value * len(batch.labels)
        correct += int(np.sum(np.argmax(logits.value, axis=1) == batch.labels))
    return loss_sum / len(ds), correct / len(ds)


def train(
    config: TrainConfig,
    train_set: Optional[Dataset] = None,
    test_set: Optional[Dataset] = None,
    origins: Optional[Dict[str, str]] = None,
    logger: Optional[RunLogger] = None,
) -> TrainResult:
    """Train the mini model and write metrics.csv, weights.csv, summary.txt and model.ckpt.

    Args:
        config: Run configuration
        train_set: Training data; loaded from config.data_dir when omitted
        test_set: Test data; loaded from config.data_dir when omitted
        origins: Source of each setting, recorded in the run manifest
        logger: Logger (the default logger when omitted)

    Returns:
        TrainResult with the trained model, one MetricsRecord per epoch and
        the final skip weight of every site

    Raises:
        ConfigurationError: Invalid config
        NumericDivergenceError: Non-finite loss, with epoch and batch recorded
    """
    logger = logger or get_logger()
    config.validate()
    logger.log_run_start(config.to_dict())

    train_set, test_set = prepare_data(config, train_set, test_set, logger)
    model = build_model(model_config_for(config, train_set))
    optimizer = build_optimizer(config.optimizer, model.trainable(), config.lr)
    manifest = RunManifest(
        config=config.embedded(),
        origins=dict(origins or {}),
        datasets={"train": train_set.content_hash, "test": test_set.content_hash},
    )
    header = manifest.header_lines()
    out_dir = Path(config.out_dir)

    metrics: List[MetricsRecord] = []
    timer = EpochTimer()
    with MetricsWriter(out_dir / METRICS_FILE, header) as writer:
        for epoch in range(1, config.epochs + 1):
            timer.start()
            train_loss, train_acc = train_epoch(model, optimizer, train_set, config, epoch, timer, logger)
            timer.begin("evaluate")
            test_acc = evaluate(model, test_set, config.batch_size)
            timer.end("evaluate")
            seconds = timer.stop()

            record = MetricsRecord(epoch, train_loss, train_acc, test_acc, seconds if config.record_timing else 0.0)
            writer.append(record)
            metrics.append(record)
            logger.log_epoch(replace(record, seconds=seconds))

    weights = extract_skip_weights(model)
    report = WeightReport([w.site for w in weights])
    report.add_round([w.value for w in weights])
    report.write(out_dir / WEIGHTS_FILE, header)
    save_checkpoint(
        model,
        out_dir / CHECKPOINT_FILE,
        metadata={
            "config": config.embedded(),
            "dataset_sha256": manifest.dataset_sha256,
            "final_metrics": asdict(metrics[-1]),
        },
    )
    manifest.save(out_dir / MANIFEST_FILE)
    write_summary(out_dir / SUMMARY_FILE, run_summary(config, manifest, metrics, weights, timer))
    logger.info("Training finished", out_dir=str(out_dir), test_acc=metrics[-1].test_acc)

    return TrainResult(model, metrics, weights, manifest, out_dir)


def run_summary(
    config: TrainConfig,
    manifest: RunManifest,
    metrics: List[MetricsRecord],
    weights: List[SkipWeight],
    timer: Optional[EpochTimer] = None,
) -> List[str]:
    final = metrics[-1]
    lines = [
        f"mode: {config.mode}",
        f"dataset: {config.dataset}",
        f"seed: {config.seed}",
        f"epochs: {config.epochs}",
        f"final train_loss: {final.train_loss:.6f}",
        f"final train_acc: {final.train_acc:.4f}",
        f"final test_acc: {final.test_acc:.4f}",
    ]
    if timer is not None:
        lines.append(f"last epoch seconds: {timer.timings.total:.3f}")
    lines.append("skip weights:")
    lines += [f"  {w.site}: {w.value:.6f}{'' if w.trainable else ' (fixed)'}" for w in weights]
    lines.append(f"dataset_sha256: {manifest.dataset_sha256 or 'n/a'}")
    lines.append(f"config: {manifest.header_lines()[0][len('# config='):]}")
    if manifest.origins:
        lines.append("config origins:")
        lines += format_origins(manifest.origins, only_explicit=True)
    return lines
