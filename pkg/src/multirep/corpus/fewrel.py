"""
FewRel-format readers and writers.

Dataset files map relation ids to lists of
``{"tokens": [...], "h": [name, id, [[indices], ...]], "t": [...]}``;
description files map relation ids to ``[name, description]``.
"""

import json
import logging
from pathlib import Path
from typing import Any, Mapping, Union

from multirep.corpus.models import (
    DatasetSplit,
    RelationDescription,
    RelationInstance,
    Span,
    SplitRole,
)
from multirep.exceptions import ParseError, ValidationError


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _mention_span(mention: Any) -> tuple[str, Span]:
    """First mention of an entity entry, as (entity id, contiguous span)."""
    if not isinstance(mention, (list, tuple)) or len(mention) < 3:
        raise ValueError("entity entry must be [name, id, [[indices], ...]]")
    positions = mention[2]
    if not positions or not isinstance(positions[0], (list, tuple)) or not positions[0]:
        raise ValueError("entity entry has no token indices")
    first = [int(i) for i in positions[0]]
    return str(mention[1] or ""), (min(first), max(first))


def parse_instance(entry: Any, relation_id: str) -> RelationInstance:
    """
    Build one instance from a FewRel entry.

    Raises:
        ValueError, TypeError, KeyError: On structural problems.
        ValidationError: On span violations.
    """
    tokens = entry["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise ValueError("'tokens' must be a list of strings")
    head_id, head_span = _mention_span(entry["h"])
    tail_id, tail_span = _mention_span(entry["t"])
    return RelationInstance(
        tokens=tuple(tokens),
        head_span=head_span,
        tail_span=tail_span,
        relation_id=relation_id,
        head_id=head_id,
        tail_id=tail_id,
    )


def parse_fewrel(data: Any, role: SplitRole = SplitRole.TRAIN) -> DatasetSplit:
    """
    Build a split from decoded FewRel JSON.

    Raises:
        ParseError: If an entry is malformed (names relation and index).
        ValidationError: If an entry violates the span invariants.
    """
    if not isinstance(data, dict):
        raise ParseError("FewRel data must be an object mapping relation id to instances")

    relations: dict[str, tuple[RelationInstance, ...]] = {}
    for relation_id, entries in data.items():
        if not isinstance(entries, list):
            raise ParseError(f"relation '{relation_id}': expected a list of instances")
        parsed = []
        for index, entry in enumerate(entries):
            try:
                parsed.append(parse_instance(entry, relation_id))
            except ValidationError as e:
                raise ValidationError(f"relation '{relation_id}' instance {index}: {e}") from e
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"relation '{relation_id}' instance {index}: {e}") from e
        relations[relation_id] = tuple(parsed)
    return DatasetSplit(relations, role)


def _read_json(path: PathLike, **kwargs: Any) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    if not text.strip():
        return None
    try:
        return json.loads(text, **kwargs)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from e


def load_fewrel_json(path: PathLike, role: SplitRole = SplitRole.TRAIN) -> DatasetSplit:
    """
    Load a FewRel-format dataset file.

    Args:
        path: JSON file.
        role: Role assigned to the resulting split.

    Returns:
        DatasetSplit with every instance validated.

    Raises:
        ParseError: Unreadable file or malformed entry.
        ValidationError: Span violations.
    """
    data = _read_json(path)
    split = parse_fewrel({} if data is None else data, role)
    logger.info(
        "Loaded %s: %d relations, %d instances", path, len(split), split.num_instances
    )
    return split


def dump_fewrel(split: DatasetSplit) -> dict[str, list[dict]]:
    return {
        rid: [inst.to_fewrel() for inst in items]
        for rid, items in split.relations.items()
    }


def save_fewrel_json(split: DatasetSplit, path: PathLike) -> None:
    """Write a split in FewRel layout; loading it back gives an equal split."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(dump_fewrel(split), indent=1), encoding="utf-8")


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise ValidationError(f"duplicate relation id '{key}' in descriptions")
        out[key] = value
    return out


def parse_descriptions(data: Mapping[str, Any]) -> dict[str, RelationDescription]:
    """
    Build description records from decoded JSON.

    Raises:
        ParseError: If an entry is not a [name, description] pair.
    """
    if not isinstance(data, Mapping):
        raise ParseError("descriptions must be an object mapping relation id to [name, text]")
    out = {}
    for relation_id, pair in data.items():
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(p, str) for p in pair)
        ):
            raise ParseError(f"description '{relation_id}': expected [name, description]")
        out[relation_id] = RelationDescription(relation_id, pair[0], pair[1])
    return out


def load_descriptions_json(path: PathLike) -> dict[str, RelationDescription]:
    """
    Load relation descriptions.

    An empty file gives an empty map. Ids missing from the file are only
    an error once an episode needs them.

    Raises:
        ParseError: Unreadable file or malformed entry.
        ValidationError: A relation id appears twice.
    """
    data = _read_json(path, object_pairs_hook=_reject_duplicates)
    descriptions = parse_descriptions({} if data is None else data)
    logger.info("Loaded %d relation descriptions from %s", len(descriptions), path)
    return descriptions


def save_descriptions_json(
    descriptions: Mapping[str, RelationDescription],
    path: PathLike,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {rid: descriptions[rid].to_pair() for rid in sorted(descriptions)}
    path.write_text(json.dumps(data, indent=1), encoding="utf-8")
