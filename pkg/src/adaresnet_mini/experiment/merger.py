"""Source priority resolution and merging of run settings."""

from typing import Any, Dict, Optional

from ..exceptions import ConfigurationError
from ..settings import SOURCE_PRIORITY
from .tracing import Origin, Tracer

SOURCE_ORIGINS = {
    "cli": Origin.CLI,
    "system": Origin.SYSTEM,
    "file": Origin.FILE,
    "defaults": Origin.DEFAULT,
}


class ConfigurationMerger:
    """Merges settings from several sources with deterministic priority."""

    def __init__(self, tracer: Optional[Tracer] = None):
        """Initialize merger.

        Args:
            tracer: Optional tracer for origin tracking
        """
        self.tracer = tracer

    def merge(self, sources: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
        """Merge sources so that the highest-priority source wins per key.

        Sources are applied from the lowest priority (largest number in
        SOURCE_PRIORITY) to the highest, each overriding what came before.

        Args:
            sources: Mapping of source name ("cli", "system", "file", "defaults")
                to the settings it supplies

        Returns:
            Merged settings

        Raises:
            ConfigurationError: If a source name is unknown
        """
        unknown = set(sources) - set(SOURCE_PRIORITY)
        if unknown:
            raise ConfigurationError(f"Unknown configuration sources: {sorted(unknown)}")

        merged: Dict[str, Any] = {}
        for name in sorted(SOURCE_PRIORITY, key=SOURCE_PRIORITY.get, reverse=True):
            values = sources.get(name)
            if not values:
                continue
            if self.tracer is not None:
                for key in values:
                    self.tracer.record(key, SOURCE_ORIGINS[name])
            merged.update(values)
        return merged
