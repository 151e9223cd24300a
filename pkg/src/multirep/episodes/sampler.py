"""
Episode sampling.

Episode ``index`` of a stream seeded with ``seed`` is drawn from its own
generator, ``default_rng([seed, index])``, so any episode can be replayed
without drawing the ones before it.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Mapping, Optional

import numpy as np

from multirep.corpus import DatasetSplit, RelationDescription
from multirep.episodes.models import Episode, EpisodeSpec, InstanceRef
from multirep.exceptions import ConfigurationError, SamplingError


logger = logging.getLogger(__name__)


def episode_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for episode ``index`` of the stream seeded with ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


def _descriptions_for(
    relation_ids: tuple[str, ...],
    descriptions: Optional[Mapping[str, RelationDescription]],
) -> tuple[RelationDescription, ...]:
    missing = [rid for rid in relation_ids if not descriptions or rid not in descriptions]
    if missing:
        raise ConfigurationError(f"no description for relation(s): {', '.join(missing)}")
    return tuple(descriptions[rid] for rid in relation_ids)


def sample_episode(
    split: DatasetSplit,
    spec: EpisodeSpec,
    rng: np.random.Generator,
    descriptions: Optional[Mapping[str, RelationDescription]] = None,
    seed: Optional[int] = None,
    index: Optional[int] = None,
) -> Episode:
    """
    Draw one episode.

    N relations are drawn uniformly without replacement from the split's
    sorted relation ids; the draw order is the class order. For each,
    K+Q instances are drawn without replacement, the first K becoming
    support.

    Args:
        split: Source split.
        spec: Episode shape.
        rng: Generator consumed by the draw.
        descriptions: Descriptions to attach when ``spec.with_descriptions`` is set.
        seed: Recorded on the episode for dumps.
        index: Recorded on the episode for dumps.

    Raises:
        ConfigurationError: If the split has fewer than N relations or a
            description is missing.
        SamplingError: If a drawn relation has fewer than K+Q instances.
    """
    spec.check_feasible(split)
    pool = split.relation_ids
    chosen = tuple(pool[int(i)] for i in rng.choice(len(pool), size=spec.n, replace=False))

    support, support_refs, query, query_refs = [], [], [], []
    for rid in chosen:
        items = split.relations[rid]
        if len(items) < spec.per_class:
            raise SamplingError(
                f"relation '{rid}' has {len(items)} instances, "
                f"{spec.k}-shot with {spec.q} queries needs {spec.per_class}"
            )
        picks = [int(i) for i in rng.choice(len(items), size=spec.per_class, replace=False)]
        for j, pick in enumerate(picks):
            ref = InstanceRef(rid, pick)
            if j < spec.k:
                support.append(items[pick])
                support_refs.append(ref)
            else:
                query.append(items[pick])
                query_refs.append(ref)

    attached = _descriptions_for(chosen, descriptions) if spec.with_descriptions else ()
    return Episode(
        relation_ids=chosen,
        support=tuple(support),
        support_refs=tuple(support_refs),
        query=tuple(query),
        query_refs=tuple(query_refs),
        descriptions=attached,
        seed=seed,
        index=index,
    )


def episode_stream(
    split: DatasetSplit,
    spec: EpisodeSpec,
    seed: int,
    count: int,
    descriptions: Optional[Mapping[str, RelationDescription]] = None,
    start: int = 0,
) -> Iterator[Episode]:
    """Episodes ``start`` .. ``start + count - 1`` of the seeded stream."""
    for index in range(start, start + count):
        yield sample_episode(split, spec, episode_rng(seed, index), descriptions, seed, index)


class EpisodeSampler:
    """
    Replayable episode source over one split.

    Checks up front that every relation can fill K+Q slots, and can
    pre-sample episodes on worker threads.

    Example:
        sampler = EpisodeSampler(train, EpisodeSpec(n=5, k=1), seed=7, descriptions=descs)
        first = sampler.episode(0)
        batch = sampler.prefetch(start=0, count=4)
    """

    def __init__(
        self,
        split: DatasetSplit,
        spec: EpisodeSpec,
        seed: int,
        descriptions: Optional[Mapping[str, RelationDescription]] = None,
        workers: int = 1,
    ):
        spec.check_feasible(split)
        for rid, items in split.relations.items():
            if len(items) < spec.per_class:
                raise SamplingError(
                    f"relation '{rid}' has {len(items)} instances, needs {spec.per_class}"
                )
        if spec.with_descriptions:
            _descriptions_for(tuple(split.relation_ids), descriptions)

        self.split = split
        self.spec = spec
        self.seed = int(seed)
        self.descriptions = descriptions
        self.workers = max(1, workers)

    def episode(self, index: int) -> Episode:
        return sample_episode(
            self.split, self.spec, episode_rng(self.seed, index),
            self.descriptions, self.seed, index,
        )

    def stream(self, count: int, start: int = 0) -> Iterator[Episode]:
        for index in range(start, start + count):
            yield self.episode(index)

    def prefetch(self, start: int, count: int) -> list[Episode]:
        """Sample episodes start .. start+count-1, possibly in parallel."""
        indices = range(start, start + count)
        if self.workers == 1 or count < 2:
            return [self.episode(i) for i in indices]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(self.episode, indices))
