"""Skip-weight allocation policies."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..exceptions import ConfigurationError


class BlockKind(str, Enum):
    """Residual block kinds."""

    IDENTITY = "identity"
    PROJECTION = "projection"


FIXED = "fixed"
UNIFIED = "unified"
PER_TYPE = "per-type"
PER_BLOCK = "per-block"

MODE_KINDS = (FIXED, UNIFIED, PER_TYPE, PER_BLOCK)


@dataclass(frozen=True)
class AdaSkipMode:
    """How skip weights are allocated and shared across skip sites.

    ``fixed:<c>`` uses the constant c everywhere with no trainable parameter
    (c = 1 is a plain residual network); ``unified`` shares one trainable
    scalar; ``per-type`` has one scalar per block kind; ``per-block`` has one
    scalar per skip site.
    """

    kind: str
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ConfigurationError(
                f"Unknown skip mode {self.kind!r}; expected one of {', '.join(MODE_KINDS)}"
            )
        if self.kind == FIXED:
            if self.value is None or not math.isfinite(self.value):
                raise ConfigurationError("Fixed skip mode needs a finite constant")
        elif self.value is not None:
            raise ConfigurationError(f"Skip mode {self.kind!r} takes no constant")

    @classmethod
    def fixed(cls, value: float) -> "AdaSkipMode":
        return cls(FIXED, float(value))

    @classmethod
    def unified(cls) -> "AdaSkipMode":
        return cls(UNIFIED)

    @classmethod
    def per_type(cls) -> "AdaSkipMode":
        return cls(PER_TYPE)

    @classmethod
    def per_block(cls) -> "AdaSkipMode":
        return cls(PER_BLOCK)

    @property
    def trainable(self) -> bool:
        return self.kind != FIXED

    def parameter_name(self, site: str, kind: BlockKind) -> Optional[str]:
        """Name of the parameter bound at a skip site, None for fixed modes."""
        if self.kind == UNIFIED:
            return "skip.unified"
        if self.kind == PER_TYPE:
            return f"skip.{BlockKind(kind).value}"
        if self.kind == PER_BLOCK:
            return f"skip.{site}"
        return None

    @property
    def slug(self) -> str:
        """File-name friendly form, e.g. ``fixed-1`` or ``per-block``."""
        return str(self).replace(":", "-")

    def __str__(self) -> str:
        if self.kind == FIXED:
            return f"fixed:{self.value:.15g}"
        return self.kind


def parse_mode(text) -> AdaSkipMode:
    """Parse ``fixed:<c>``, ``unified``, ``per-type`` or ``per-block``.

    Underscores are accepted in place of hyphens and case is ignored.

    Raises:
        ConfigurationError: If the text is not a known mode
    """
    if isinstance(text, AdaSkipMode):
        return text
    raw = str(text).strip().lower().replace("_", "-")
    if raw.startswith(FIXED + ":"):
        constant = raw.split(":", 1)[1]
        try:
            return AdaSkipMode.fixed(float(constant))
        except ValueError:
            raise ConfigurationError(f"Invalid fixed skip constant {constant!r} in mode {text!r}")
    if raw == FIXED:
        raise ConfigurationError("Fixed skip mode needs a constant, e.g. 'fixed:1'")
    if raw in MODE_KINDS:
        return AdaSkipMode(raw)
    raise ConfigurationError(
        f"Unknown skip mode {text!r}; expected fixed:<c>, unified, per-type or per-block"
    )
