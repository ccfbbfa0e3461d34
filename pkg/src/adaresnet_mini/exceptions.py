"""Custom exceptions for adaresnet-mini."""

from typing import Optional


class AdaResNetError(Exception):
    """Base exception for adaresnet-mini errors."""
    pass


class ConfigurationError(AdaResNetError):
    """Raised when a model or run configuration is invalid."""
    pass


class ShapeError(AdaResNetError):
    """Raised when tensor shapes or channel counts do not line up."""
    pass


class TargetError(AdaResNetError):
    """Raised when one-hot targets or labels are malformed."""
    pass


class NumericDivergenceError(AdaResNetError):
    """Raised when a computation produces NaN or Inf."""

    def __init__(
        self,
        message: str,
        epoch: Optional[int] = None,
        batch: Optional[int] = None,
    ):
        self.epoch = epoch
        self.batch = batch
        if epoch is not None:
            message = f"{message} (epoch={epoch}, batch={batch})"
        super().__init__(message)


class GraphError(AdaResNetError):
    """Raised when backward is called on an unusable graph."""
    pass


class OptimizerError(AdaResNetError):
    """Raised when an optimizer step cannot be applied."""
    pass


class CheckpointError(AdaResNetError):
    """Raised when a checkpoint file is malformed or incompatible."""
    pass


class AnalysisError(AdaResNetError):
    """Raised when weight tables cannot be analysed."""
    pass


class DatasetError(AdaResNetError):
    """Base exception for dataset loading failures."""
    pass


class DatasetParseError(DatasetError):
    """Raised when a dataset file cannot be parsed."""
    pass


class BadMagicError(DatasetParseError):
    """Raised when an IDX file starts with an unexpected magic number."""
    pass


class TruncatedPayloadError(DatasetParseError):
    """Raised when a file holds fewer bytes than its header promises."""
    pass


class CountMismatchError(DatasetParseError):
    """Raised when image and label files disagree on the item count."""
    pass


class LabelRangeError(DatasetParseError):
    """Raised when a label byte is outside the class range."""
    pass


class ChecksumError(DatasetError):
    """Raised when a dataset file does not match its recorded digest."""
    pass


class SubsampleError(DatasetError):
    """Raised when a subsample cannot be drawn."""
    pass
