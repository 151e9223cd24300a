"""
Pytest configuration and fixtures.
"""

import pytest
import sys
import os
from dataclasses import dataclass
from pathlib import Path

# Add the source tree to path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from multirep.autodiff import using_precision
from multirep.corpus import (
    DatasetSplit,
    RelationDescription,
    RelationInstance,
    SplitRole,
    SyntheticSpec,
)
from multirep.encoder import EncoderConfig
from multirep.episodes import EpisodeSpec
from multirep.harness import DataConfig, RunConfig, RunData, TrainResult, load_data, toy_episode, train


def tiny_run_config(**overrides) -> RunConfig:
    """A run small enough to train in a second: 3-way episodes, 3 relations per split."""
    settings = dict(
        encoder=EncoderConfig(layers=1, hidden=16, heads=2, ff=32, dropout=0.1, max_positions=32),
        episodes=EpisodeSpec(n=3, k=1, q=1),
        data=DataConfig(max_len=32, val_relations=3),
        synthetic=SyntheticSpec(
            num_relations=10,
            instances_per_relation=6,
            train_relations=6,
            vocab_size=30,
            min_length=6,
            max_length=8,
            num_cue_words=5,
            entity_pool_size=6,
        ),
        iterations=3,
        episodes_per_step=1,
        eval_episodes=4,
        val_episodes=2,
        log_interval=1,
        seeds=(0,),
    )
    settings.update(overrides)
    return RunConfig(**settings)


def build_split(
    num_relations: int,
    per_relation: int,
    role: SplitRole = SplitRole.TRAIN,
    prefix: str = "R",
) -> DatasetSplit:
    """Hand-made split: relation r has sentences 'h<r> rel<r> w<i> t<r>'."""
    relations = {}
    for r in range(num_relations):
        rid = f"{prefix}{r:02d}"
        relations[rid] = tuple(
            RelationInstance(
                tokens=(f"h{r}", f"rel{r}", f"w{i}", f"t{r}"),
                head_span=(0, 0),
                tail_span=(3, 3),
                relation_id=rid,
            )
            for i in range(per_relation)
        )
    return DatasetSplit(relations, role)


def build_descriptions(split: DatasetSplit) -> dict[str, RelationDescription]:
    return {
        rid: RelationDescription(rid, f"name {rid.lower()}", f"relation number {rid.lower()}")
        for rid in split.relation_ids
    }


@dataclass
class TrainedRun:
    """A finished tiny training run and where it was written."""
    config: RunConfig
    data: RunData
    result: TrainResult
    output_dir: Path


@pytest.fixture
def double_precision():
    """Run the test in double precision."""
    with using_precision("double"):
        yield


@pytest.fixture
def split_factory():
    """Factory for hand-made splits."""
    return build_split


@pytest.fixture
def small_split():
    """Five relations with four sentences each."""
    return build_split(5, 4)


@pytest.fixture
def small_descriptions(small_split):
    """Descriptions for every relation of small_split."""
    return build_descriptions(small_split)


@pytest.fixture
def toy():
    """The fixed 2-way 1-shot episode and its vocabulary."""
    return toy_episode()


@pytest.fixture
def config_factory():
    """Factory for tiny run configs with overrides."""
    return tiny_run_config


@pytest.fixture
def tiny_config():
    """Tiny run config."""
    return tiny_run_config()


@pytest.fixture
def tiny_data(tiny_config):
    """Synthetic corpus of the tiny config."""
    return load_data(tiny_config)


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory):
    """One tiny training run with checkpoints on disk, shared by the session."""
    config = tiny_run_config()
    data = load_data(config)
    out = tmp_path_factory.mktemp("trained")
    result = train(config, data, str(out))
    return TrainedRun(config=config, data=data, result=result, output_dir=out)
