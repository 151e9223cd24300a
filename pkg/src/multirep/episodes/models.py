"""
Episode data models.
"""

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from multirep.corpus import DatasetSplit, RelationDescription, RelationInstance
from multirep.exceptions import ConfigurationError
from multirep.textproc import (
    PaddedBatch,
    Vocab,
    encode_description,
    encode_instance,
    pad_batch,
)


@dataclass(frozen=True)
class EpisodeSpec:
    """
    N-way K-shot episode shape.

    Attributes:
        n: Classes per episode (N >= 2).
        k: Support instances per class (K >= 1).
        q: Query instances per class; defaults to K.
        with_descriptions: Attach the N relation descriptions.
    """
    n: int = 5
    k: int = 1
    q: Optional[int] = None
    with_descriptions: bool = True

    def __post_init__(self) -> None:
        if self.q is None:
            object.__setattr__(self, "q", self.k)
        if self.n < 2:
            raise ConfigurationError("an episode needs at least 2 classes")
        if self.k < 1 or self.q < 1:
            raise ConfigurationError("K and Q must be at least 1")

    @property
    def per_class(self) -> int:
        return self.k + self.q

    @property
    def label(self) -> str:
        """Table-cell name, e.g. "5-1"."""
        return f"{self.n}-{self.k}"

    def check_feasible(self, split: DatasetSplit) -> None:
        """
        Raises:
            ConfigurationError: If the split has fewer than N relations.
        """
        if self.n > len(split):
            raise ConfigurationError(
                f"{self.n}-way episodes need {self.n} relations, "
                f"the {split.role.value} split has {len(split)}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "k": self.k, "q": self.q, "with_descriptions": self.with_descriptions}


@dataclass(frozen=True)
class InstanceRef:
    """Position of an instance in its split."""
    relation_id: str
    index: int


@dataclass(frozen=True)
class EncodedEpisode:
    """
    Padded batches for one episode.

    Attributes:
        support: N*K support inputs, class-major.
        query: N*Q query inputs, class-major.
        descriptions: N description inputs in class order, or None.
        support_labels: Class index per support row.
        query_labels: Class index per query row.
    """
    support: PaddedBatch
    query: PaddedBatch
    descriptions: Optional[PaddedBatch]
    support_labels: np.ndarray
    query_labels: np.ndarray

    def joined(self, pad_id: int) -> tuple[PaddedBatch, dict[str, np.ndarray]]:
        """
        All inputs in one batch, for a single encoder pass.

        Returns:
            (batch, part name -> row indices) with parts "support",
            "query" and, when present, "descriptions".
        """
        parts = [("support", self.support), ("query", self.query)]
        if self.descriptions is not None:
            parts.append(("descriptions", self.descriptions))
        inputs = []
        rows: dict[str, np.ndarray] = {}
        for name, part in parts:
            rows[name] = np.arange(len(inputs), len(inputs) + part.size)
            inputs.extend(part.inputs)
        return pad_batch(inputs, pad_id), rows


@dataclass(frozen=True)
class Episode:
    """
    One sampled N-way K-shot task.

    Class c is ``relation_ids[c]``; support and query lists are
    class-major. Support and query never share an instance.
    """
    relation_ids: tuple[str, ...]
    support: tuple[RelationInstance, ...]
    support_refs: tuple[InstanceRef, ...]
    query: tuple[RelationInstance, ...]
    query_refs: tuple[InstanceRef, ...]
    descriptions: tuple[RelationDescription, ...] = ()
    seed: Optional[int] = None
    index: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.relation_ids)

    @property
    def k(self) -> int:
        return len(self.support) // self.n

    @property
    def q(self) -> int:
        return len(self.query) // self.n

    @property
    def support_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.k)

    @property
    def query_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.q)

    @property
    def has_descriptions(self) -> bool:
        return bool(self.descriptions)

    def encode(self, vocab: Vocab, max_len: int) -> EncodedEpisode:
        """Render, encode and pad every input of the episode once."""
        descriptions = None
        if self.descriptions:
            descriptions = pad_batch(
                [encode_description(d, vocab, max_len) for d in self.descriptions],
                vocab.pad_id,
            )
        return EncodedEpisode(
            support=pad_batch([encode_instance(i, vocab, max_len) for i in self.support], vocab.pad_id),
            query=pad_batch([encode_instance(i, vocab, max_len) for i in self.query], vocab.pad_id),
            descriptions=descriptions,
            support_labels=self.support_labels,
            query_labels=self.query_labels,
        )

    def to_dict(self) -> dict[str, Any]:
        """Debug dump: relation ids, instance indices, seed and index."""
        return {
            "seed": self.seed,
            "index": self.index,
            "relation_ids": list(self.relation_ids),
            "support": [[r.relation_id, r.index] for r in self.support_refs],
            "query": [[r.relation_id, r.index] for r in self.query_refs],
            "with_descriptions": self.has_descriptions,
        }
