"""Wall-clock timing of training phases."""

import time
from dataclasses import dataclass, field
from typing import Dict, Optional

from ..utils.logging import get_logger


@dataclass
class EpochTimings:
    """Accumulated seconds per phase for one epoch."""

    total: float = 0.0
    phases: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {"total": self.total, "phases": dict(self.phases)}


class EpochTimer:
    """Times an epoch and the phases inside it."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.timings = EpochTimings()
        self.start_time: Optional[float] = None
        self._phase_start: Dict[str, float] = {}

    def start(self) -> None:
        """Reset and start timing an epoch."""
        self.timings = EpochTimings()
        if self.enabled:
            self.start_time = time.perf_counter()

    def stop(self) -> float:
        """Stop timing and return the epoch's seconds (0.0 when disabled)."""
        if self.enabled and self.start_time is not None:
            self.timings.total = time.perf_counter() - self.start_time
            get_logger().debug(
                "Epoch timing",
                total=self.timings.total,
                **{k: v for k, v in sorted(self.timings.phases.items())},
            )
        return self.timings.total

    def begin(self, phase: str) -> None:
        if self.enabled:
            self._phase_start[phase] = time.perf_counter()

    def end(self, phase: str) -> None:
        if self.enabled and phase in self._phase_start:
            elapsed = time.perf_counter() - self._phase_start.pop(phase)
            self.timings.phases[phase] = self.timings.phases.get(phase, 0.0) + elapsed
