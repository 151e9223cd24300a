"""
Corpus loading for runs.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from multirep.corpus import (
    DatasetSplit,
    RelationDescription,
    SplitRole,
    check_disjoint,
    generate_synthetic,
    load_descriptions_json,
    load_fewrel_json,
    split_relations,
)
from multirep.exceptions import ConfigurationError
from multirep.harness.config import RunConfig
from multirep.textproc import Vocab, build_vocab


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunData:
    """
    Splits, descriptions and vocabulary of one run.

    ``validation`` picks the best checkpoint during training and
    ``held_out`` is what evaluation reports. The three splits share no
    relation.
    """
    train: DatasetSplit
    validation: DatasetSplit
    held_out: DatasetSplit
    descriptions: dict[str, RelationDescription]
    vocab: Vocab


def carve_validation(train: DatasetSplit, count: int, seed: int) -> tuple[DatasetSplit, DatasetSplit]:
    """
    Move ``count`` relations of the training split into a validation split.

    The choice depends only on the relation ids and the seed.

    Returns:
        (remaining training split, validation split).

    Raises:
        ConfigurationError: If fewer than two training relations would remain.
    """
    if count > len(train) - 2:
        raise ConfigurationError(
            f"cannot take {count} validation relations from {len(train)} training relations"
        )
    ids = sorted(train.relation_ids)
    chosen = [ids[i] for i in np.random.default_rng(seed).permutation(len(ids))[:count]]
    validation, rest = split_relations(train, chosen)
    return rest, validation.with_role(SplitRole.VALIDATION)


def load_data(config: RunConfig, vocab: Optional[Vocab] = None) -> RunData:
    """
    Load or generate the corpus named by the config.

    The validation split is carved from the training relations. The
    vocabulary is counted over every split and all descriptions unless
    one is given (for example from a checkpoint).

    Raises:
        ParseError, ValidationError: On malformed files or overlapping splits.
        ConfigurationError: If the training split is too small to carve.
    """
    data = config.data
    if data.synthetic:
        train, held_out, descriptions = generate_synthetic(config.synthetic, data.corpus_seed)
    else:
        train = load_fewrel_json(data.train_path, SplitRole.TRAIN)
        held_out = load_fewrel_json(data.eval_path, SplitRole.TEST)
        descriptions = load_descriptions_json(data.descriptions_path) if data.descriptions_path else {}
    train, validation = carve_validation(train, data.val_relations, data.corpus_seed)
    check_disjoint(train, validation, held_out)

    if vocab is None:
        vocab = build_vocab([train, validation, held_out], descriptions, data.min_freq)
    logger.info(
        "Corpus: %d train / %d validation / %d held-out relations (%d / %d / %d instances), %d descriptions",
        len(train), len(validation), len(held_out),
        train.num_instances, validation.num_instances, held_out.num_instances, len(descriptions),
    )
    return RunData(
        train=train, validation=validation, held_out=held_out, descriptions=descriptions, vocab=vocab
    )
