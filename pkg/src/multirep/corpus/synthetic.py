"""
Synthetic relation corpus.

Each relation is a small grammar: a head entity, a two-word connective
built from a shared pool of cue words, and a tail entity, padded with
filler words. Relations come in confusable pairs that share an entity
pool and one cue word, so only the second cue tells them apart.

Descriptions name the cues through gloss words, one per cue word, that
never occur in a sentence. Matching a description to its instances
therefore has to be learned from the training relations.
"""

import itertools
import logging
from dataclasses import asdict, dataclass

import numpy as np

from multirep.corpus.models import (
    DatasetSplit,
    RelationDescription,
    RelationInstance,
    SplitRole,
)
from multirep.exceptions import ConfigurationError


logger = logging.getLogger(__name__)

# Head, two cues, tail, with two-token entities on both sides.
MIN_SENTENCE = 6


@dataclass(frozen=True)
class SyntheticSpec:
    """
    Shape of a synthetic corpus.

    Attributes:
        num_relations: Relation count R (at least 4).
        instances_per_relation: Instances generated for every relation.
        train_relations: Relations assigned to the train split; the rest
            go to the eval split.
        vocab_size: Number of distinct filler words.
        min_length: Shortest sentence, in tokens.
        max_length: Longest sentence, in tokens.
        num_cue_words: Size of the shared cue-word pool.
        entity_pool_size: Entities per confusable pair.
        flip_rate: Probability that the tail entity is written first.
    """
    num_relations: int = 12
    instances_per_relation: int = 50
    train_relations: int = 8
    vocab_size: int = 200
    min_length: int = 8
    max_length: int = 16
    num_cue_words: int = 8
    entity_pool_size: int = 30
    flip_rate: float = 0.25

    def __post_init__(self) -> None:
        if self.num_relations < 4:
            raise ConfigurationError("synthetic corpus needs at least 4 relations")
        if not 1 <= self.train_relations < self.num_relations:
            raise ConfigurationError(
                f"train_relations must be in [1, {self.num_relations - 1}]"
            )
        if self.instances_per_relation < 1:
            raise ConfigurationError("instances_per_relation must be positive")
        if self.vocab_size < 1:
            raise ConfigurationError("vocab_size must be positive")
        if not MIN_SENTENCE <= self.min_length <= self.max_length:
            raise ConfigurationError(
                f"need {MIN_SENTENCE} <= min_length <= max_length, "
                f"got {self.min_length} and {self.max_length}"
            )
        if self.entity_pool_size < 2:
            raise ConfigurationError("entity_pool_size must be at least 2")
        if self.num_cue_words < 3 or self.num_cue_words * (self.num_cue_words - 1) // 2 < self.num_relations:
            raise ConfigurationError(
                f"{self.num_cue_words} cue words cannot give {self.num_relations} distinct connectives"
            )
        if not 0.0 <= self.flip_rate <= 1.0:
            raise ConfigurationError("flip_rate must be in [0, 1]")

    @property
    def eval_relations(self) -> int:
        return self.num_relations - self.train_relations

    def to_dict(self) -> dict:
        return asdict(self)


def relation_id(index: int) -> str:
    return f"S{index:02d}"


def _connectives(spec: SyntheticSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    """
    Cue-word pairs, one per relation.

    Relations 2i and 2i+1 share their first cue; every pair is distinct.
    """
    triples = list(itertools.combinations(range(spec.num_cue_words), 3))
    order = rng.permutation(len(triples))
    used: set[frozenset] = set()
    pairs: list[tuple[int, int]] = []

    for t in order:
        if len(pairs) + 2 > spec.num_relations:
            break
        a, b, c = (int(x) for x in rng.permutation(triples[t]))
        first, second = frozenset((a, b)), frozenset((a, c))
        if first in used or second in used:
            continue
        used.update((first, second))
        pairs.extend([(a, b), (a, c)])

    if len(pairs) < spec.num_relations:
        for a, b in itertools.combinations(range(spec.num_cue_words), 2):
            if len(pairs) == spec.num_relations:
                break
            if frozenset((a, b)) not in used:
                used.add(frozenset((a, b)))
                pairs.append((a, b))
    if len(pairs) < spec.num_relations:
        raise ConfigurationError("could not assign a distinct connective to every relation")
    return pairs


def _entity_name(pool: int, index: int) -> tuple[str, ...]:
    if index % 3 == 2:
        return (f"p{pool}e{index}", f"p{pool}f{index}")
    return (f"p{pool}e{index}",)


def _sentence(
    spec: SyntheticSpec,
    rng: np.random.Generator,
    rid: str,
    cues: tuple[str, str],
    pool: int,
) -> RelationInstance:
    head_index, tail_index = (int(i) for i in rng.choice(spec.entity_pool_size, 2, replace=False))
    head = _entity_name(pool, head_index)
    tail = _entity_name(pool, tail_index)

    def filler(count: int) -> list[str]:
        return [f"w{int(i)}" for i in rng.integers(0, spec.vocab_size, size=count)]

    first, second = (tail, head) if rng.random() < spec.flip_rate else (head, tail)
    gap_before = filler(int(rng.integers(0, 2)))
    gap_after = filler(int(rng.integers(0, 2)))
    core = list(first) + gap_before + list(cues) + gap_after + list(second)

    length = max(len(core), int(rng.integers(spec.min_length, spec.max_length + 1)))
    extra = length - len(core)
    prefix_len = int(rng.integers(0, extra + 1))
    prefix = filler(prefix_len)
    tokens = prefix + core + filler(extra - prefix_len)

    first_span = (prefix_len, prefix_len + len(first) - 1)
    second_start = prefix_len + len(core) - len(second)
    second_span = (second_start, second_start + len(second) - 1)
    head_span, tail_span = (first_span, second_span) if first is head else (second_span, first_span)

    return RelationInstance(
        tokens=tuple(tokens),
        head_span=head_span,
        tail_span=tail_span,
        relation_id=rid,
        head_id=f"Q{pool}_{head_index}",
        tail_id=f"Q{pool}_{tail_index}",
    )


def generate_synthetic(
    spec: SyntheticSpec,
    seed: int,
) -> tuple[DatasetSplit, DatasetSplit, dict[str, RelationDescription]]:
    """
    Generate a train/eval corpus with disjoint relations.

    Args:
        spec: Corpus shape.
        seed: Generation seed; equal seeds give equal corpora.

    Returns:
        (train split, eval split, descriptions for every relation).
    """
    rng = np.random.default_rng(seed)
    cue_words = [f"c{i}" for i in range(spec.num_cue_words)]
    glosses = [f"g{i}" for i in range(spec.num_cue_words)]
    connectives = _connectives(spec, rng)

    instances: dict[str, tuple[RelationInstance, ...]] = {}
    descriptions: dict[str, RelationDescription] = {}
    for r, (a, b) in enumerate(connectives):
        rid = relation_id(r)
        cues = (cue_words[a], cue_words[b])
        pool = r // 2
        instances[rid] = tuple(
            _sentence(spec, rng, rid, cues, pool)
            for _ in range(spec.instances_per_relation)
        )
        descriptions[rid] = RelationDescription(
            relation_id=rid,
            name=f"{glosses[a]} {glosses[b]}",
            description_text=f"the subject is linked to the object by {glosses[a]} then {glosses[b]}",
        )

    # Confusable pairs stay on the same side of the split where the counts allow it.
    groups = [list(range(g, min(g + 2, spec.num_relations))) for g in range(0, spec.num_relations, 2)]
    order = [r for g in rng.permutation(len(groups)) for r in groups[g]]
    train_ids = {relation_id(r) for r in order[:spec.train_relations]}

    train = DatasetSplit(
        {rid: items for rid, items in instances.items() if rid in train_ids},
        SplitRole.TRAIN,
    )
    held_out = DatasetSplit(
        {rid: items for rid, items in instances.items() if rid not in train_ids},
        SplitRole.TEST,
    )
    logger.info(
        "Generated synthetic corpus: %d train / %d eval relations, %d instances each",
        len(train), len(held_out), spec.instances_per_relation,
    )
    return train, held_out, descriptions
