"""Variance analysis of learned skip weights across rounds and datasets."""

from .fixtures import fixture_names
from .variance import (
    VarianceReport,
    WeightMatrix,
    analyze,
    between_group_variance,
    fixture_matrix,
    load_weight_matrix,
    read_weight_matrix,
    variance_report,
    within_group_variance,
)

__all__ = [
    "VarianceReport",
    "WeightMatrix",
    "analyze",
    "between_group_variance",
    "fixture_matrix",
    "fixture_names",
    "load_weight_matrix",
    "read_weight_matrix",
    "variance_report",
    "within_group_variance",
]
