"""Run artifacts: provenance manifest, metrics and weight tables, summaries.

CSV artifacts open with ``#`` provenance lines (resolved config and dataset
hash); every reader here skips them. Nothing time-dependent is written to
the CSV files, so identical runs produce identical bytes.
"""

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Union

from .. import __version__
from ..exceptions import AnalysisError
from ..settings import METRICS_HEADER

PathLike = Union[str, Path]


@dataclass
class MetricsRecord:
    """End-of-epoch metrics; accuracies lie in [0, 1]."""

    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float
    seconds: float = 0.0

    def to_row(self) -> List[str]:
        return [
            str(self.epoch),
            f"{self.train_loss:.8f}",
            f"{self.train_acc:.6f}",
            f"{self.test_acc:.6f}",
            f"{self.seconds:.3f}",
        ]


def combine_hashes(*hashes: str) -> str:
    """One digest for several dataset hashes ("" when none are known)."""
    known = [h for h in hashes if h]
    if not known:
        return ""
    if len(set(known)) == 1:
        return known[0]
    return hashlib.sha256(",".join(known).encode("ascii")).hexdigest()


@dataclass
class RunManifest:
    """Provenance of a run: config, where each setting came from, data hashes."""

    config: Dict[str, Any]
    origins: Dict[str, str] = field(default_factory=dict)
    datasets: Dict[str, str] = field(default_factory=dict)
    version: str = __version__

    @property
    def dataset_sha256(self) -> str:
        return combine_hashes(*(self.datasets[k] for k in sorted(self.datasets)))

    def header_lines(self) -> List[str]:
        """``#`` lines placed at the top of CSV artifacts."""
        config = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return [f"# config={config}", f"# dataset_sha256={self.dataset_sha256}"]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def save(self, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path


def _write_header(f: TextIO, header_lines: Iterable[str]) -> None:
    for line in header_lines:
        f.write(line + "\n")


def _data_lines(path: PathLike) -> List[str]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [line for line in f.read().splitlines() if line and not line.startswith("#")]


def read_header_lines(path: PathLike) -> Dict[str, str]:
    """``# key=value`` provenance lines of a CSV artifact."""
    out: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            out[key] = value
    return out


class MetricsWriter:
    """Appends one metrics row per epoch, flushing after every row."""

    def __init__(self, path: PathLike, header_lines: Sequence[str] = ()):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        _write_header(self._file, header_lines)
        self._writer.writerow(METRICS_HEADER)
        self._file.flush()

    def append(self, record: MetricsRecord) -> None:
        self._writer.writerow(record.to_row())
        self._file.flush()

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_metrics(path: PathLike) -> List[MetricsRecord]:
    """Parse a metrics.csv file."""
    rows = list(csv.reader(io.StringIO("\n".join(_data_lines(path)))))
    if not rows or rows[0] != METRICS_HEADER:
        raise AnalysisError(f"{path} is not a metrics file (header {rows[0] if rows else None})")
    return [
        MetricsRecord(int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4]))
        for r in rows[1:]
    ]


@dataclass
class WeightReport:
    """Final skip weights: one row per site, one column per round."""

    sites: List[str]
    rounds: List[List[float]] = field(default_factory=list)

    def add_round(self, values: Sequence[float]) -> None:
        if len(values) != len(self.sites):
            raise AnalysisError(f"Round has {len(values)} weights for {len(self.sites)} sites")
        self.rounds.append([float(v) for v in values])

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def rows(self) -> List[List[float]]:
        """Site-major values, L×R."""
        return [[column[i] for column in self.rounds] for i in range(len(self.sites))]

    def write(self, path: PathLike, header_lines: Sequence[str] = ()) -> Path:
        """Write ``site,round_1..round_R``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            _write_header(f, header_lines)
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["site"] + [f"round_{r}" for r in range(1, self.num_rounds + 1)])
            for site, row in zip(self.sites, self.rows()):
                writer.writerow([site] + [repr(v) for v in row])
        return path

    @classmethod
    def read(cls, path: PathLike) -> "WeightReport":
        """Parse a weights table written by write()."""
        rows = list(csv.reader(io.StringIO("\n".join(_data_lines(path)))))
        if not rows or not rows[0] or rows[0][0] != "site":
            raise AnalysisError(f"{path} is not a weight table (expected a 'site' header)")
        width = len(rows[0]) - 1
        report = cls([r[0] for r in rows[1:]])
        try:
            values = [[float(v) for v in r[1:]] for r in rows[1:]]
        except ValueError as e:
            raise AnalysisError(f"{path}: non-numeric weight ({e})")
        if any(len(v) != width for v in values):
            raise AnalysisError(f"{path}: rows do not all have {width} rounds")
        report.rounds = [[row[r] for row in values] for r in range(width)]
        return report


def write_summary(path: PathLike, lines: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def format_origins(origins: Dict[str, str], only_explicit: bool = False) -> List[str]:
    """``key: origin`` lines, optionally skipping settings left at their defaults."""
    return [
        f"  {key}: {origin}"
        for key, origin in sorted(origins.items())
        if not (only_explicit and origin == "defaults")
    ]


def optional_float(value: Optional[float], fmt: str = ".4f") -> str:
    return "n/a" if value is None else format(value, fmt)
