"""
Episodes layer for MultiRep.

N-way K-shot episode sampling with replayable per-episode generators.
"""

from multirep.episodes.models import EncodedEpisode, Episode, EpisodeSpec, InstanceRef
from multirep.episodes.sampler import (
    EpisodeSampler,
    episode_rng,
    episode_stream,
    sample_episode,
)

__all__ = [
    "EpisodeSpec",
    "Episode",
    "EncodedEpisode",
    "InstanceRef",
    "EpisodeSampler",
    "sample_episode",
    "episode_stream",
    "episode_rng",
]
