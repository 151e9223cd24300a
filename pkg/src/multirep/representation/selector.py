"""
Representation selection.

Instances provide five component vectors and descriptions five aligned
ones; a selector picks which components enter the embeddings. The
``entity_pair`` unit stands for both entity-start vectors.
"""

import itertools
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from multirep.exceptions import ConfigurationError


INSTANCE_COMPONENTS: tuple[str, ...] = ("avg_pool", "cls", "mask", "e1s", "e2s")
DESCRIPTION_COMPONENTS: tuple[str, ...] = ("avg_pool", "cls", "mask", "cls_drop", "mask_drop")

# Description component filling the same embedding slot as each instance component.
DESCRIPTION_PARTNER: dict[str, str] = dict(zip(INSTANCE_COMPONENTS, DESCRIPTION_COMPONENTS))

UNITS: dict[str, tuple[str, ...]] = {
    "avg_pool": ("avg_pool",),
    "cls": ("cls",),
    "mask": ("mask",),
    "entity_pair": ("e1s", "e2s"),
}

DEFAULT_DESCRIPTION_DROPOUT = 0.10


def expand_tags(tags: Iterable[str]) -> tuple[str, ...]:
    """
    Expand unit tags to components, in canonical order.

    Raises:
        ConfigurationError: On an unknown tag.
    """
    chosen = set()
    for tag in tags:
        if tag in UNITS:
            chosen.update(UNITS[tag])
        elif tag in INSTANCE_COMPONENTS:
            chosen.add(tag)
        else:
            valid = ", ".join(list(UNITS) + ["e1s", "e2s"])
            raise ConfigurationError(f"unknown representation '{tag}'. Valid: {valid}")
    return tuple(c for c in INSTANCE_COMPONENTS if c in chosen)


@dataclass(frozen=True)
class RepSelector:
    """
    Ordered subset of representation components.

    Components are kept in the fixed order avg_pool, cls, mask, e1s, e2s
    whatever order they are given in. M is the number of components.

    Attributes:
        components: Selected instance components (unit tags accepted).
        description_dropout: Dropout rate for the cls_drop and mask_drop
            description components.

    Example:
        RepSelector(("mask", "entity_pair")).components   # ("mask", "e1s", "e2s")
        RepSelector.full().without("cls").m               # 4
    """
    components: tuple[str, ...] = INSTANCE_COMPONENTS
    description_dropout: float = DEFAULT_DESCRIPTION_DROPOUT

    def __post_init__(self) -> None:
        tags = (self.components,) if isinstance(self.components, str) else self.components
        expanded = expand_tags(tags)
        if not expanded:
            raise ConfigurationError("representation selector is empty")
        if not 0.0 <= self.description_dropout < 1.0:
            raise ConfigurationError("description dropout must be in [0, 1)")
        object.__setattr__(self, "components", expanded)

    @classmethod
    def full(cls, description_dropout: float = DEFAULT_DESCRIPTION_DROPOUT) -> "RepSelector":
        return cls(INSTANCE_COMPONENTS, description_dropout)

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def description_components(self) -> tuple[str, ...]:
        return tuple(DESCRIPTION_PARTNER[c] for c in self.components)

    @property
    def units(self) -> tuple[str, ...]:
        """Units whose components are all selected."""
        return tuple(u for u, parts in UNITS.items() if all(p in self.components for p in parts))

    @property
    def needs_entity_markers(self) -> bool:
        return "e1s" in self.components or "e2s" in self.components

    def without(self, unit: str) -> "RepSelector":
        """
        Drop a unit or component.

        Raises:
            ConfigurationError: If nothing would remain.
        """
        removed = set(expand_tags([unit]))
        return RepSelector(
            tuple(c for c in self.components if c not in removed),
            self.description_dropout,
        )

    def subsets(self, size: int) -> list["RepSelector"]:
        """All selectors made of ``size`` of this selector's components."""
        return [
            RepSelector(combo, self.description_dropout)
            for combo in itertools.combinations(self.components, size)
        ]

    @property
    def label(self) -> str:
        return "+".join(self.components)

    def to_dict(self) -> dict[str, Any]:
        return {
            "components": list(self.components),
            "description_dropout": self.description_dropout,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RepSelector":
        unknown = sorted(set(data) - {"components", "description_dropout"})
        if unknown:
            raise ConfigurationError(f"unknown selector settings: {', '.join(unknown)}")
        return cls(
            tuple(data.get("components", INSTANCE_COMPONENTS)),
            float(data.get("description_dropout", DEFAULT_DESCRIPTION_DROPOUT)),
        )
