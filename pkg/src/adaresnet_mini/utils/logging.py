"""Structured logging utilities for adaresnet-mini."""

import logging
from typing import Any, Dict, Optional

LOGGER_NAME = "adaresnet_mini"


class RunLogger:
    """Structured logger for training runs and analysis."""

    def __init__(
        self,
        name: str = LOGGER_NAME,
        level: int = logging.INFO,
    ):
        """Initialize logger.

        Args:
            name: Logger name
            level: Logging level
        """
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)

        # Add console handler if none exists
        if not self.logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(
                logging.Formatter(
                    "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
                )
            )
            self.logger.addHandler(handler)

    def set_level(self, level: int) -> None:
        """Change the logging level."""
        self.logger.setLevel(level)

    def debug(self, message: str, **kwargs: Any) -> None:
        """Log debug message."""
        self._log(logging.DEBUG, message, **kwargs)

    def info(self, message: str, **kwargs: Any) -> None:
        """Log info message."""
        self._log(logging.INFO, message, **kwargs)

    def warning(self, message: str, **kwargs: Any) -> None:
        """Log warning message."""
        self._log(logging.WARNING, message, **kwargs)

    def error(self, message: str, **kwargs: Any) -> None:
        """Log error message."""
        self._log(logging.ERROR, message, **kwargs)

    def _log(self, level: int, message: str, **kwargs: Any) -> None:
        """Internal log method rendering keyword context.

        Args:
            level: Logging level
            message: Log message
            **kwargs: Additional context, rendered as key=value pairs
        """
        if not self.logger.isEnabledFor(level):
            return

        if kwargs:
            context = ", ".join(f"{k}={_format_value(v)}" for k, v in kwargs.items())
            full_message = f"{message} | {context}"
        else:
            full_message = message

        self.logger.log(level, full_message)

    def log_run_start(self, config: Dict[str, Any]) -> None:
        """Log the start of a training run.

        Args:
            config: Resolved configuration as a plain dict
        """
        self.info(
            "Starting training run",
            dataset=config.get("dataset"),
            mode=config.get("mode"),
            epochs=config.get("epochs"),
            seed=config.get("seed"),
        )

    def log_epoch(self, record: Any) -> None:
        """Log an end-of-epoch metrics record.

        Args:
            record: MetricsRecord instance
        """
        self.info(
            f"Epoch {record.epoch} finished",
            train_loss=record.train_loss,
            train_acc=record.train_acc,
            test_acc=record.test_acc,
            seconds=record.seconds,
        )

    def log_divergence(self, epoch: int, batch: int, loss: float) -> None:
        """Log a non-finite loss.

        Args:
            epoch: Epoch index
            batch: Batch index within the epoch
            loss: Offending loss value
        """
        self.error("Numeric divergence", epoch=epoch, batch=batch, loss=loss)


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


# Default logger instance
_default_logger: Optional[RunLogger] = None


def get_logger(name: str = LOGGER_NAME) -> RunLogger:
    """Get or create default logger instance.

    Args:
        name: Logger name

    Returns:
        Logger instance
    """
    global _default_logger
    if _default_logger is None:
        _default_logger = RunLogger(name)
    return _default_logger
