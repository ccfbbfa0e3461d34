"""Within-group and between-group variance of learned skip weights.

All variances are population variances (divide by N) of absolute weight
values, computed per site and then averaged over sites.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..exceptions import AnalysisError
from ..experiment.artifacts import WeightReport, read_header_lines
from .fixtures import ALIASES, FIXTURES, fixture_names


@dataclass
class WeightMatrix:
    """Final weights of one group: L sites × R rounds."""

    group: str
    values: np.ndarray
    sites: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise AnalysisError(f"{self.group}: weight matrix must be L×R with L, R >= 1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise AnalysisError(f"{self.group}: weight matrix holds non-finite values")
        if not self.sites:
            self.sites = [f"site_{i}" for i in range(1, self.values.shape[0] + 1)]
        if len(self.sites) != self.values.shape[0]:
            raise AnalysisError(f"{self.group}: {len(self.sites)} site names for {self.values.shape[0]} rows")

    @property
    def num_sites(self) -> int:
        return self.values.shape[0]

    @property
    def num_rounds(self) -> int:
        return self.values.shape[1]

    def site_means(self) -> np.ndarray:
        """Mean absolute weight per site across rounds."""
        return np.abs(self.values).mean(axis=1)


def within_group_variance(m: WeightMatrix) -> float:
    """Mean over sites of the across-round variance of |w|.

    Raises:
        AnalysisError: If there are fewer than 2 rounds
    """
    if m.num_rounds < 2:
        raise AnalysisError(f"{m.group}: within-group variance needs at least 2 rounds, got {m.num_rounds}")
    return float(np.abs(m.values).var(axis=1).mean())


def between_group_variance(a: WeightMatrix, b: WeightMatrix) -> float:
    """Mean over sites of the variance between the two groups' mean |w|.

    Raises:
        AnalysisError: If the groups have different site counts
    """
    if a.num_sites != b.num_sites:
        raise AnalysisError(f"Site counts differ: {a.group} has {a.num_sites}, {b.group} has {b.num_sites}")
    means = np.stack([a.site_means(), b.site_means()])
    return float(means.var(axis=0).mean())


@dataclass
class VarianceReport:
    """Within-group variance per group, between-group variance and per-site means."""

    groups: List[str]
    within: Dict[str, float]
    between: float
    site_means: Dict[str, List[float]]
    sites: List[str]

    @property
    def between_exceeds_within(self) -> bool:
        return self.between > max(self.within.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "groups": list(self.groups),
            "within_group_variance": dict(self.within),
            "between_group_variance": self.between,
            "between_exceeds_within": self.between_exceeds_within,
            "sites": list(self.sites),
            "site_mean_abs": {g: list(v) for g, v in self.site_means.items()},
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_yaml(self) -> str:
        try:
            import yaml
        except ImportError:
            raise AnalysisError("YAML output needs PyYAML; install with: pip install adaresnet-mini[yaml]")
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def to_text(self) -> str:
        """Structured plain-text report."""
        lines = ["variance report"]
        lines.append("within_group_variance:")
        lines += [f"  {g}: {self.within[g]:.4f}" for g in self.groups]
        lines.append(f"between_group_variance: {self.between:.4f}")
        lines.append(f"between_exceeds_within: {str(self.between_exceeds_within).lower()}")
        lines.append("site_mean_abs:")
        width = max(len(s) for s in self.sites)
        lines.append("  " + "site".ljust(width) + "".join(f"  {g:>12}" for g in self.groups))
        for i, site in enumerate(self.sites):
            lines.append("  " + site.ljust(width) + "".join(f"  {self.site_means[g][i]:12.4f}" for g in self.groups))
        return "\n".join(lines)


def variance_report(a: WeightMatrix, b: WeightMatrix) -> VarianceReport:
    """Both variances for two groups; between is symmetric in (a, b)."""
    between = between_group_variance(a, b)
    names = [a.group, b.group]
    if names[0] == names[1]:
        names = [f"{a.group} (a)", f"{b.group} (b)"]
    within = {names[0]: within_group_variance(a), names[1]: within_group_variance(b)}
    return VarianceReport(
        groups=names,
        within=within,
        between=between,
        site_means={names[0]: a.site_means().tolist(), names[1]: b.site_means().tolist()},
        sites=list(a.sites),
    )


def _group_from_header(path: Path) -> Optional[str]:
    config = read_header_lines(path).get("config")
    if not config:
        return None
    try:
        return json.loads(config).get("dataset")
    except ValueError:
        return None


def read_weight_matrix(path: Union[str, Path], group: Optional[str] = None) -> WeightMatrix:
    """Read a ``site,round_1..round_R`` table written by the experiment harness.

    The group defaults to the dataset recorded in the file's provenance
    header, then to the file name.
    """
    path = Path(path)
    if not path.is_file():
        raise AnalysisError(f"Weight table not found: {path}")
    report = WeightReport.read(path)
    if not report.sites:
        raise AnalysisError(f"{path}: weight table has no sites")
    group = group or _group_from_header(path) or path.stem
    return WeightMatrix(group, np.array(report.rows()), report.sites)


def fixture_matrix(name: str) -> WeightMatrix:
    key = ALIASES.get(name, name)
    if key not in FIXTURES:
        raise AnalysisError(f"Unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    group, rows = FIXTURES[key]
    return WeightMatrix(group, np.array(rows), [f"layer_{i}" for i in range(1, len(rows) + 1)])


def load_weight_matrix(source: Union[str, Path], group: Optional[str] = None) -> WeightMatrix:
    """A bundled fixture by name, or a weight table by path."""
    name = str(source)
    if name in FIXTURES or name in ALIASES:
        matrix = fixture_matrix(name)
        if group:
            matrix.group = group
        return matrix
    return read_weight_matrix(source, group)


def analyze(sources: Sequence[Union[str, Path]]) -> VarianceReport:
    """variance_report for exactly two fixtures or weight tables."""
    if len(sources) != 2:
        raise AnalysisError(f"Analysis compares exactly two groups, got {len(sources)}")
    return variance_report(load_weight_matrix(sources[0]), load_weight_matrix(sources[1]))
