"""
Corpus data models.

Relation instances, relation descriptions, and relation-keyed dataset
splits. All of them are immutable once built.
"""

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from multirep.exceptions import ValidationError


Span = tuple[int, int]


class SplitRole(str, Enum):
    """Role of a dataset split."""
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


def spans_overlap(a: Span, b: Span) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


@dataclass(frozen=True)
class RelationInstance:
    """
    One sentence with a head and a tail entity.

    Spans are inclusive token index ranges. Entity ids are carried only
    so that a loaded file can be written back unchanged.

    Attributes:
        tokens: Surface tokens.
        head_span: (start, end) of the head entity, inclusive.
        tail_span: (start, end) of the tail entity, inclusive.
        relation_id: Relation label.
        head_id: Optional external id of the head entity.
        tail_id: Optional external id of the tail entity.
    """
    tokens: tuple[str, ...]
    head_span: Span
    tail_span: Span
    relation_id: str
    head_id: str = ""
    tail_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "head_span", tuple(int(i) for i in self.head_span))
        object.__setattr__(self, "tail_span", tuple(int(i) for i in self.tail_span))

        n = len(self.tokens)
        for label, (start, end) in (("head", self.head_span), ("tail", self.tail_span)):
            if not 0 <= start <= end < n:
                raise ValidationError(
                    f"{label} span ({start}, {end}) outside {n} tokens "
                    f"in relation '{self.relation_id}'"
                )
        if spans_overlap(self.head_span, self.tail_span):
            raise ValidationError(
                f"head span {self.head_span} overlaps tail span {self.tail_span} "
                f"in relation '{self.relation_id}'"
            )

    @property
    def head_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.head_span[0]:self.head_span[1] + 1]

    @property
    def tail_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.tail_span[0]:self.tail_span[1] + 1]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def to_fewrel(self) -> dict:
        """Entry in FewRel layout: tokens plus h/t as [name, id, [[indices]]]."""
        def mention(tokens: tuple[str, ...], entity_id: str, span: Span) -> list:
            return [" ".join(tokens), entity_id, [list(range(span[0], span[1] + 1))]]

        return {
            "tokens": list(self.tokens),
            "h": mention(self.head_tokens, self.head_id, self.head_span),
            "t": mention(self.tail_tokens, self.tail_id, self.tail_span),
        }


@dataclass(frozen=True)
class RelationDescription:
    """Name and textual definition of a relation type."""
    relation_id: str
    name: str
    description_text: str

    def to_pair(self) -> list[str]:
        return [self.name, self.description_text]


@dataclass(frozen=True)
class DatasetSplit:
    """
    Instances grouped by relation id.

    Attributes:
        relations: relation id -> instances, in file order.
        role: Train, validation or test.
    """
    relations: Mapping[str, tuple[RelationInstance, ...]] = field(default_factory=dict)
    role: SplitRole = SplitRole.TRAIN

    def __post_init__(self) -> None:
        frozen = {rid: tuple(items) for rid, items in self.relations.items()}
        for rid, items in frozen.items():
            for index, inst in enumerate(items):
                if inst.relation_id != rid:
                    raise ValidationError(
                        f"instance {index} under '{rid}' is labelled '{inst.relation_id}'"
                    )
        object.__setattr__(self, "relations", MappingProxyType(frozen))
        object.__setattr__(self, "role", SplitRole(self.role))

    @property
    def relation_ids(self) -> list[str]:
        """Relation ids in sorted order."""
        return sorted(self.relations)

    @property
    def num_instances(self) -> int:
        return sum(len(items) for items in self.relations.values())

    def instances(self, relation_id: str) -> tuple[RelationInstance, ...]:
        try:
            return self.relations[relation_id]
        except KeyError:
            raise ValidationError(f"unknown relation id '{relation_id}'") from None

    def counts(self) -> dict[str, int]:
        return {rid: len(items) for rid, items in self.relations.items()}

    def iter_instances(self) -> Iterator[RelationInstance]:
        for rid in self.relation_ids:
            yield from self.relations[rid]

    def with_role(self, role: SplitRole) -> "DatasetSplit":
        return DatasetSplit(dict(self.relations), role)

    def __len__(self) -> int:
        return len(self.relations)

    def __contains__(self, relation_id: object) -> bool:
        return relation_id in self.relations

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DatasetSplit):
            return NotImplemented
        return self.role == other.role and dict(self.relations) == dict(other.relations)


def split_relations(
    split: DatasetSplit,
    ids: Iterable[str],
) -> tuple[DatasetSplit, DatasetSplit]:
    """
    Partition a split by relation id.

    Args:
        split: Split to partition.
        ids: Relation ids for the first part.

    Returns:
        (part with ids, part with the remaining relations). Both keep the
        original role.

    Raises:
        ValidationError: If an id is not a relation of the split.
    """
    wanted = set(ids)
    unknown = sorted(wanted - set(split.relations))
    if unknown:
        raise ValidationError(f"unknown relation ids: {', '.join(unknown)}")
    chosen = {rid: items for rid, items in split.relations.items() if rid in wanted}
    rest = {rid: items for rid, items in split.relations.items() if rid not in wanted}
    return DatasetSplit(chosen, split.role), DatasetSplit(rest, split.role)


def check_disjoint(*splits: DatasetSplit) -> None:
    """
    Raises:
        ValidationError: If any two splits share a relation id.
    """
    seen: dict[str, SplitRole] = {}
    for split in splits:
        for rid in split.relations:
            if rid in seen:
                raise ValidationError(
                    f"relation '{rid}' appears in both {seen[rid].value} and {split.role.value}"
                )
            seen[rid] = split.role
