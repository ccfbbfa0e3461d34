"""Multi-round comparison of skip-weight modes."""

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..data.dataset import Dataset
from ..data.sources import load_dataset
from ..exceptions import ConfigurationError
from ..nn.modes import AdaSkipMode, parse_mode
from ..settings import ACCURACY_FILE, SUMMARY_FILE
from ..utils.logging import RunLogger, get_logger
from .artifacts import MetricsRecord, WeightReport, combine_hashes, optional_float, write_summary
from .config import TrainConfig
from .train import train

BASELINE = AdaSkipMode.fixed(1.0)


@dataclass
class RunOutcome:
    """What a comparison keeps from one (mode, round) run."""

    mode: str
    round: int
    seed: int
    metrics: List[MetricsRecord]
    sites: List[str]
    weights: List[float]
    dataset_sha256: str = ""

    @property
    def final_test_acc(self) -> float:
        return self.metrics[-1].test_acc


def _run_one(job: Tuple[TrainConfig, int, Optional[Dataset], Optional[Dataset]]) -> RunOutcome:
    config, round_index, train_set, test_set = job
    result = train(config, train_set, test_set)
    return RunOutcome(
        mode=str(config.mode),
        round=round_index,
        seed=config.seed,
        metrics=result.metrics,
        sites=[w.site for w in result.weights],
        weights=result.weight_row,
        dataset_sha256=result.manifest.dataset_sha256,
    )


@dataclass
class Comparison:
    """Results of every (mode, round) run."""

    base: TrainConfig
    modes: List[AdaSkipMode]
    rounds: int
    outcomes: Dict[Tuple[str, int], RunOutcome] = field(default_factory=dict)

    def runs(self, mode: Union[str, AdaSkipMode]) -> List[RunOutcome]:
        key = str(parse_mode(mode))
        return [self.outcomes[(key, r)] for r in range(1, self.rounds + 1)]

    def final_accuracies(self, mode) -> List[float]:
        return [run.final_test_acc for run in self.runs(mode)]

    def mean_accuracy(self, mode) -> float:
        return float(np.mean(self.final_accuracies(mode)))

    @property
    def has_baseline(self) -> bool:
        return BASELINE in self.modes

    def improvement(self, mode) -> Optional[float]:
        """(acc - baseline) / baseline on mean final test accuracy.

        None when fixed:1 was not among the modes or its accuracy is zero.
        """
        if not self.has_baseline:
            return None
        baseline = self.mean_accuracy(BASELINE)
        if baseline == 0:
            return None
        return (self.mean_accuracy(mode) - baseline) / baseline

    def weight_report(self, mode) -> WeightReport:
        """Final weights of one mode, sites × rounds."""
        runs = self.runs(mode)
        report = WeightReport(runs[0].sites)
        for run in runs:
            report.add_round(run.weights)
        return report

    def header_lines(self, mode: Optional[Union[str, AdaSkipMode]] = None) -> List[str]:
        """Provenance lines for the comparison, or for one mode's weight table.

        The config is the base config with the per-round seeds spelled out;
        ``mode`` is present only when a mode is given.
        """
        config = {k: v for k, v in self.base.embedded().items() if k not in ("mode", "seed")}
        config["base_seed"] = self.base.seed
        config["seeds"] = [self.base.seed + r for r in range(1, self.rounds + 1)]
        config["modes"] = [str(m) for m in self.modes]
        config["rounds"] = self.rounds
        if mode is None:
            outcomes = list(self.outcomes.values())
        else:
            config["mode"] = str(parse_mode(mode))
            outcomes = self.runs(mode)
        digest = combine_hashes(*(o.dataset_sha256 for o in outcomes))
        return [
            f"# config={json.dumps(config, sort_keys=True, separators=(',', ':'))}",
            f"# dataset_sha256={digest}",
        ]

    def write(self, out_dir: Union[str, Path]) -> Path:
        """Write accuracy.csv, weights_<mode>.csv and summary.txt."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        header = self.header_lines()

        with open(out_dir / ACCURACY_FILE, "w", encoding="utf-8", newline="") as f:
            for line in header:
                f.write(line + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["mode", "round", "seed", "epoch", "train_loss", "train_acc", "test_acc"])
            for mode in self.modes:
                for run in self.runs(mode):
                    for record in run.metrics:
                        writer.writerow([run.mode, run.round, run.seed] + record.to_row()[:4])

        for mode in self.modes:
            self.weight_report(mode).write(out_dir / f"weights_{mode.slug}.csv", self.header_lines(mode))

        write_summary(out_dir / SUMMARY_FILE, header + self.summary_lines())
        return out_dir

    def summary_lines(self) -> List[str]:
        lines = [f"rounds: {self.rounds}, base seed: {self.base.seed} (round r uses seed base + r)"]
        header = ["mode"] + [f"round_{r}" for r in range(1, self.rounds + 1)] + ["mean", "improvement"]
        lines.append("  ".join(header))
        for mode in self.modes:
            accs = self.final_accuracies(mode)
            improvement = self.improvement(mode)
            row = [str(mode)] + [f"{a:.4f}" for a in accs] + [f"{np.mean(accs):.4f}"]
            row.append("n/a" if improvement is None else f"{improvement * 100:+.2f}%")
            lines.append("  ".join(row))
        if not self.has_baseline:
            lines.append("no fixed:1 baseline in this comparison; improvement not computed")
        else:
            lines.append(f"baseline mean test_acc: {optional_float(self.mean_accuracy(BASELINE))}")
        return lines


def compare_modes(
    base: TrainConfig,
    modes: Sequence[Union[str, AdaSkipMode]],
    rounds: int,
    workers: int = 1,
    train_set: Optional[Dataset] = None,
    test_set: Optional[Dataset] = None,
    logger: Optional[RunLogger] = None,
) -> Comparison:
    """Train every mode for rounds 1..R with seed base.seed + r.

    Each run writes its own artifacts under ``<out>/<mode>/round_<r>``; the
    comparison tables go to ``<out>``. Runs execute in worker processes when
    workers > 1.

    Raises:
        ConfigurationError: Empty mode list, rounds < 1 or workers < 1
    """
    logger = logger or get_logger()
    parsed = [parse_mode(m) for m in modes]
    if not parsed:
        raise ConfigurationError("compare_modes needs at least one mode")
    if len(set(parsed)) != len(parsed):
        raise ConfigurationError(f"Duplicate modes in {[str(m) for m in parsed]}")
    if rounds < 1:
        raise ConfigurationError(f"rounds must be at least 1, got {rounds}")
    if workers < 1:
        raise ConfigurationError(f"workers must be at least 1, got {workers}")
    base.validate()

    if train_set is None:
        train_set = load_dataset(base.dataset, base.data_dir, "train")
    if test_set is None:
        test_set = load_dataset(base.dataset, base.data_dir, "test")

    out_dir = Path(base.out_dir)
    jobs = []
    for mode in parsed:
        for r in range(1, rounds + 1):
            config = base.replace(
                mode=mode,
                seed=base.seed + r,
                plain_residual=False,
                out_dir=str(out_dir / mode.slug / f"round_{r}"),
            )
            jobs.append((config, r, train_set, test_set))

    logger.info("Starting mode comparison", modes=",".join(str(m) for m in parsed), rounds=rounds, workers=workers)
    if workers == 1:
        outcomes = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))

    comparison = Comparison(base, parsed, rounds)
    for outcome in outcomes:
        comparison.outcomes[(outcome.mode, outcome.round)] = outcome
    comparison.write(out_dir)
    for mode in parsed:
        logger.info(
            "Mode finished",
            mode=str(mode),
            mean_test_acc=comparison.mean_accuracy(mode),
            improvement=optional_float(comparison.improvement(mode)),
        )
    return comparison
