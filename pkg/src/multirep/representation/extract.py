"""
Representation extraction.

All representations are read from the hidden states of a single encoder
pass: the masked average, the rows at [CLS], [MASK], [E1S] and [E2S],
and for descriptions dropout copies of the [CLS] and [MASK] rows.

Functions accept one sequence (hidden [T, d]) or a batch
(hidden [B, T, d]) and return [d] or [B, d] accordingly.
"""

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from multirep.autodiff import Mode, RandomStream, Tensor, ops
from multirep.exceptions import ContractError
from multirep.representation.selector import (
    DESCRIPTION_COMPONENTS,
    INSTANCE_COMPONENTS,
    RepSelector,
)
from multirep.textproc import InputKind, PaddedBatch


Positions = Union[int, Sequence[Optional[int]], np.ndarray]


def extract_avg(hidden: Tensor, attn_mask: np.ndarray) -> Tensor:
    """
    Mean of the hidden rows whose mask is 1.

    Raises:
        ContractError: If a sequence has no unmasked position.
    """
    mask = np.asarray(attn_mask, dtype=np.float64)
    if mask.shape != hidden.shape[:-1]:
        raise ContractError(f"mask {mask.shape} does not match hidden {hidden.shape}")
    counts = mask.sum(axis=-1, keepdims=True)
    if np.any(counts == 0):
        raise ContractError("cannot average a fully masked sequence")
    total = ops.sum(ops.mul(hidden, Tensor(mask[..., None])), axis=-2)
    return ops.div(total, Tensor(counts))


def extract_at(hidden: Tensor, positions: Positions) -> Tensor:
    """
    Row of each sequence at the given position.

    Raises:
        ContractError: If a position is missing or out of range.
    """
    width = hidden.shape[-2]
    if hidden.ndim == 2:
        if positions is None or not np.isscalar(positions):
            raise ContractError("a single sequence needs one position")
        pos = int(positions)
        if not 0 <= pos < width:
            raise ContractError(f"position {pos} outside width {width}")
        return ops.reshape(ops.gather_rows(hidden, [pos]), (hidden.shape[-1],))

    batch, _, d = hidden.shape
    values = [positions] * batch if np.isscalar(positions) else list(positions)
    if len(values) != batch or any(v is None for v in values):
        raise ContractError("every sequence in the batch needs a position")
    pos = np.asarray(values, dtype=np.int64)
    if np.any((pos < 0) | (pos >= width)):
        raise ContractError(f"position outside width {width}")
    flat = ops.reshape(hidden, (batch * width, d))
    return ops.gather_rows(flat, np.arange(batch) * width + pos)


def extract_cls(hidden: Tensor, pos_cls: Positions) -> Tensor:
    return extract_at(hidden, pos_cls)


def extract_mask(hidden: Tensor, pos_mask: Positions) -> Tensor:
    return extract_at(hidden, pos_mask)


def extract_entity_markers(
    hidden: Tensor,
    pos_e1s: Optional[Positions],
    pos_e2s: Optional[Positions],
) -> tuple[Tensor, Tensor]:
    """
    Rows at [E1S] and [E2S], kept as two representations.

    Raises:
        ContractError: If the input has no entity markers (descriptions).
    """
    if pos_e1s is None or pos_e2s is None:
        raise ContractError("entity markers are only defined for instances")
    return extract_at(hidden, pos_e1s), extract_at(hidden, pos_e2s)


@dataclass
class RepSet:
    """
    Named representation vectors for a batch of sequences.

    Each entry is [B, d], row i belonging to sequence i.

    Attributes:
        kind: Instance or description.
        vectors: Component tag -> [B, d] tensor.
    """
    kind: InputKind
    vectors: dict[str, Tensor]

    def __getitem__(self, tag: str) -> Tensor:
        try:
            return self.vectors[tag]
        except KeyError:
            raise ContractError(f"{self.kind.value} representations have no '{tag}'") from None

    def __contains__(self, tag: object) -> bool:
        return tag in self.vectors

    @property
    def size(self) -> int:
        return next(iter(self.vectors.values())).shape[0]

    def stacked(self, tags: Sequence[str]) -> Tensor:
        """[M, B, d] stack of the given components."""
        return ops.stack([self[t] for t in tags], axis=0)


def instance_repset(
    hidden: Tensor,
    batch: PaddedBatch,
    selector: Optional[RepSelector] = None,
) -> RepSet:
    """
    Extract instance representations from one encoder pass.

    Only the components the selector needs are extracted.
    """
    components = selector.components if selector else INSTANCE_COMPONENTS
    vectors: dict[str, Tensor] = {}
    if "avg_pool" in components:
        vectors["avg_pool"] = extract_avg(hidden, batch.attn_mask)
    if "cls" in components:
        vectors["cls"] = extract_cls(hidden, batch.positions("cls"))
    if "mask" in components:
        vectors["mask"] = extract_mask(hidden, batch.positions("mask"))
    if "e1s" in components or "e2s" in components:
        e1s, e2s = extract_entity_markers(hidden, batch.positions("e1s"), batch.positions("e2s"))
        if "e1s" in components:
            vectors["e1s"] = e1s
        if "e2s" in components:
            vectors["e2s"] = e2s
    return RepSet(InputKind.INSTANCE, vectors)


def description_repset(
    hidden: Tensor,
    batch: PaddedBatch,
    rate: float,
    mode: Mode,
    stream: Optional[RandomStream] = None,
    selector: Optional[RepSelector] = None,
) -> RepSet:
    """
    Extract description representations from one encoder pass.

    cls_drop and mask_drop are dropout copies of the [CLS] and [MASK]
    rows in train mode and plain copies in eval mode.
    """
    if any(item.kind is not InputKind.DESCRIPTION for item in batch.inputs):
        raise ContractError("description_repset needs description inputs")
    components = selector.description_components if selector else DESCRIPTION_COMPONENTS
    vectors: dict[str, Tensor] = {}
    if "avg_pool" in components:
        vectors["avg_pool"] = extract_avg(hidden, batch.attn_mask)
    cls = extract_cls(hidden, batch.positions("cls"))
    mask = extract_mask(hidden, batch.positions("mask"))
    if "cls" in components:
        vectors["cls"] = cls
    if "mask" in components:
        vectors["mask"] = mask
    if "cls_drop" in components:
        vectors["cls_drop"] = ops.dropout(cls, rate, mode, stream)
    if "mask_drop" in components:
        vectors["mask_drop"] = ops.dropout(mask, rate, mode, stream)
    return RepSet(InputKind.DESCRIPTION, vectors)


def build_instance_embedding(repset: RepSet, selector: RepSelector) -> Tensor:
    """
    Concatenate the selected components in fixed order.

    Returns:
        [B, M*d] (or [M*d] for a single sequence) embedding R.
    """
    if repset.kind is not InputKind.INSTANCE:
        raise ContractError("build_instance_embedding needs instance representations")
    return ops.concat([repset[c] for c in selector.components], axis=-1)


def build_description_embedding(
    hidden: Tensor,
    batch: PaddedBatch,
    rate: float,
    mode: Mode,
    stream: Optional[RandomStream] = None,
    selector: Optional[RepSelector] = None,
) -> Tensor:
    """
    Description embedding D = [avg; cls; mask; drop(cls); drop(mask)],
    restricted to the slots the selector keeps.

    Returns:
        [B, M*d] tensor aligned slot by slot with instance embeddings.
    """
    selector = selector or RepSelector.full(rate)
    repset = description_repset(hidden, batch, rate, mode, stream, selector)
    return ops.concat([repset[c] for c in selector.description_components], axis=-1)


def repset_from_vectors(kind: InputKind, vectors: Mapping[str, Tensor]) -> RepSet:
    """RepSet over precomputed vectors, validating the tags for the kind."""
    allowed = INSTANCE_COMPONENTS if kind is InputKind.INSTANCE else DESCRIPTION_COMPONENTS
    unknown = sorted(set(vectors) - set(allowed))
    if unknown:
        raise ContractError(f"{kind.value} representations cannot include {unknown}")
    return RepSet(kind, dict(vectors))
