"""Origin tracking for resolved run settings."""

from enum import Enum
from typing import Dict


class Origin(Enum):
    """Configuration source origins."""
    CLI = "cli"
    SYSTEM = "system"
    FILE = "file"
    DEFAULT = "defaults"


class Tracer:
    """Tracks which source supplied each setting."""

    def __init__(self):
        self._origins: Dict[str, Origin] = {}

    def record(self, key: str, origin: Origin) -> None:
        """Record the origin of a setting, replacing any earlier one."""
        self._origins[key] = origin

    def get_all_origins(self) -> Dict[str, str]:
        """Mapping of setting name to origin value, sorted by name."""
        return {k: self._origins[k].value for k in sorted(self._origins)}
