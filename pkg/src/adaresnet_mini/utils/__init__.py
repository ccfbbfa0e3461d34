"""Utility modules for adaresnet-mini."""

from .logging import RunLogger, get_logger

__all__ = [
    "RunLogger",
    "get_logger",
]
