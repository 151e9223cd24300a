"""
Embedding export for external projection.

CSV columns: split, relation_id, instance_index, component, v0 .. v{n-1}.
``component`` is a representation tag or "full" for the concatenated
embedding; all rows of one file share a dimension.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from multirep.exceptions import ContractError


FIXED_COLUMNS = ("split", "relation_id", "instance_index", "component")


@dataclass(frozen=True)
class EmbeddingRow:
    """One exported vector."""
    split: str
    relation_id: str
    instance_index: int
    component: str
    vector: tuple[float, ...]


def embedding_header(dim: int) -> list[str]:
    return list(FIXED_COLUMNS) + [f"v{i}" for i in range(dim)]


def write_embeddings_csv(path: Union[str, Path], rows: Sequence[EmbeddingRow]) -> int:
    """
    Write rows to CSV.

    Returns:
        Number of data rows written.

    Raises:
        ContractError: If the rows differ in dimension or there are none.
    """
    if not rows:
        raise ContractError("no embeddings to export")
    dims = {len(r.vector) for r in rows}
    if len(dims) != 1:
        raise ContractError(f"exported vectors differ in dimension: {sorted(dims)}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(embedding_header(dims.pop()))
        for r in rows:
            writer.writerow(
                [r.split, r.relation_id, r.instance_index, r.component]
                + [repr(float(v)) for v in r.vector]
            )
    return len(rows)


def read_embeddings_csv(path: Union[str, Path]) -> list[EmbeddingRow]:
    with Path(path).open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        next(reader)
        return [
            EmbeddingRow(
                split=row[0],
                relation_id=row[1],
                instance_index=int(row[2]),
                component=row[3],
                vector=tuple(float(v) for v in row[4:]),
            )
            for row in reader
        ]


def rows_from_matrix(
    split: str,
    relation_ids: Iterable[str],
    instance_indices: Iterable[int],
    component: str,
    matrix: np.ndarray,
) -> list[EmbeddingRow]:
    """One row per matrix row, labelled in order."""
    return [
        EmbeddingRow(split, rid, int(idx), component, tuple(float(v) for v in vec))
        for rid, idx, vec in zip(relation_ids, instance_indices, np.asarray(matrix))
    ]
