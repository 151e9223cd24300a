"""
Loss configuration and per-step loss breakdown.
"""

import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Mapping, Optional

from multirep.autodiff import Tensor, ops
from multirep.exceptions import ConfigurationError


class ScoreMode(str, Enum):
    """How description similarities enter query scores."""
    SEPARATE_SIMILARITIES = "separate_similarities"
    PROTOTYPE_ADDITION = "prototype_addition"


class ContrastiveForm(str, Enum):
    """
    Normalisation of the contrastive losses.

    INFONCE puts the positive and all negatives in the denominator.
    LITERAL is the unbounded positive-minus-negative reading, kept for
    inspection only.
    """
    INFONCE = "infonce"
    LITERAL = "literal"


@dataclass(frozen=True)
class LossConfig:
    """
    Which loss terms run and how queries are scored.

    Attributes:
        temperature: Contrastive temperature tau (> 0).
        use_rcl: Enable the representation-representation loss.
        use_rdcl: Enable the instance-description loss; needs descriptions.
        use_descriptions: Encode descriptions and add their similarities
            to query scores.
        score_mode: Separate similarities or prototype addition.
        contrastive_form: InfoNCE (default) or literal.
    """
    temperature: float = 0.1
    use_rcl: bool = True
    use_rdcl: bool = True
    use_descriptions: bool = True
    score_mode: ScoreMode = ScoreMode.SEPARATE_SIMILARITIES
    contrastive_form: ContrastiveForm = ContrastiveForm.INFONCE

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise ConfigurationError("temperature must be positive")
        if self.use_rdcl and not self.use_descriptions:
            raise ConfigurationError("use_rdcl requires use_descriptions")
        try:
            object.__setattr__(self, "score_mode", ScoreMode(self.score_mode))
            object.__setattr__(self, "contrastive_form", ContrastiveForm(self.contrastive_form))
        except ValueError as e:
            raise ConfigurationError(str(e)) from None

    def without_descriptions(self) -> "LossConfig":
        """Descriptions off, which also turns off the description loss."""
        return replace(self, use_descriptions=False, use_rdcl=False)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["score_mode"] = self.score_mode.value
        data["contrastive_form"] = self.contrastive_form.value
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LossConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown loss settings: {', '.join(unknown)}")
        return cls(**data)


@dataclass
class LossBreakdown:
    """
    Loss values of one step.

    ``total`` always equals ``l_ce + l_rcl + l_rdcl``; disabled terms are
    exactly 0. ``graph`` is the differentiable total, when there is one.
    """
    l_ce: float = 0.0
    l_rcl: float = 0.0
    l_rdcl: float = 0.0
    queries: int = 0
    graph: Optional[Tensor] = field(default=None, repr=False, compare=False)

    @property
    def total(self) -> float:
        return self.l_ce + self.l_rcl + self.l_rdcl

    @property
    def mean_ce(self) -> float:
        """Cross-entropy per query."""
        return self.l_ce / self.queries if self.queries else 0.0

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.l_ce, self.l_rcl, self.l_rdcl))

    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        if self.graph is None or other.graph is None:
            graph = self.graph if other.graph is None else other.graph
        else:
            graph = ops.add(self.graph, other.graph)
        return LossBreakdown(
            l_ce=self.l_ce + other.l_ce,
            l_rcl=self.l_rcl + other.l_rcl,
            l_rdcl=self.l_rdcl + other.l_rdcl,
            queries=self.queries + other.queries,
            graph=graph,
        )

    def to_dict(self, step: Optional[int] = None) -> dict[str, Any]:
        data: dict[str, Any] = {} if step is None else {"step": step}
        data.update(
            l_ce=self.l_ce,
            l_rcl=self.l_rcl,
            l_rdcl=self.l_rdcl,
            total=self.total,
        )
        return data
