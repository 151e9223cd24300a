"""
Token id encoding, truncation, and batch padding.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from multirep.corpus.models import RelationDescription, RelationInstance
from multirep.exceptions import ContractError, EncodingError
from multirep.textproc.templates import (
    render_description_template,
    render_instance_template,
)
from multirep.textproc.vocab import CLS, E1S, E2S, MARKER_TOKENS, MASK, SEP, Vocab


PROTECTED_TOKENS = frozenset((CLS, SEP, MASK)) | MARKER_TOKENS


class InputKind(str, Enum):
    """What an encoded sequence renders."""
    INSTANCE = "instance"
    DESCRIPTION = "description"


@dataclass(frozen=True)
class EncodedInput:
    """
    One encoded sequence with the positions of its special tokens.

    Attributes:
        ids: Token ids.
        attn_mask: 1 for real tokens (always all ones before padding).
        pos_cls: Position of [CLS] (always 0).
        pos_mask: Position of [MASK].
        pos_e1s: Position of [E1S]; instances only.
        pos_e2s: Position of [E2S]; instances only.
        kind: Instance or description.
    """
    ids: tuple[int, ...]
    attn_mask: tuple[int, ...]
    pos_cls: int
    pos_mask: int
    pos_e1s: Optional[int]
    pos_e2s: Optional[int]
    kind: InputKind

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.attn_mask):
            raise ContractError("ids and attn_mask differ in length")
        if self.pos_cls != 0:
            raise ContractError("[CLS] must be at position 0")
        has_markers = self.pos_e1s is not None and self.pos_e2s is not None
        if has_markers != (self.kind is InputKind.INSTANCE):
            raise ContractError(f"{self.kind.value} input has wrong entity marker positions")
        for pos in self.positions():
            if not 0 <= pos < len(self.ids) or not self.attn_mask[pos]:
                raise ContractError(f"position {pos} does not index a real token")

    def positions(self) -> list[int]:
        out = [self.pos_cls, self.pos_mask]
        if self.pos_e1s is not None:
            out.append(self.pos_e1s)
        if self.pos_e2s is not None:
            out.append(self.pos_e2s)
        return out

    def __len__(self) -> int:
        return len(self.ids)


def truncate(tokens: Sequence[str], max_len: int) -> list[str]:
    """
    Trim a rendered sequence to ``max_len`` tokens.

    Only tokens after the last protected token ([CLS], [SEP], [MASK] or
    an entity marker) may be dropped.

    Raises:
        EncodingError: If the protected prefix is longer than max_len.
    """
    tokens = list(tokens)
    if len(tokens) <= max_len:
        return tokens
    last = max((i for i, t in enumerate(tokens) if t in PROTECTED_TOKENS), default=-1)
    if last + 1 > max_len:
        raise EncodingError(
            f"special token at position {last} cannot be kept within max_len {max_len}"
        )
    return tokens[:max_len]


def tokenize_encode(
    tokens: Sequence[str],
    vocab: Vocab,
    max_len: int,
    kind: Optional[InputKind] = None,
) -> EncodedInput:
    """
    Encode a rendered token sequence.

    Args:
        tokens: Output of a template renderer.
        vocab: Vocabulary; unknown tokens become [UNK].
        max_len: Longest allowed sequence.
        kind: Input kind; inferred from the presence of [E1S] if omitted.

    Returns:
        EncodedInput with special-token positions recorded.

    Raises:
        EncodingError: If specials cannot fit within max_len or a
            required special is absent.
    """
    if max_len < 1:
        raise EncodingError("max_len must be positive")
    tokens = truncate(tokens, max_len)
    if kind is None:
        kind = InputKind.INSTANCE if E1S in tokens else InputKind.DESCRIPTION

    def position(special: str) -> int:
        try:
            return tokens.index(special)
        except ValueError:
            raise EncodingError(f"{kind.value} sequence has no {special}") from None

    if not tokens or tokens[0] != CLS:
        raise EncodingError("sequence must start with [CLS]")
    instance = kind is InputKind.INSTANCE
    return EncodedInput(
        ids=tuple(vocab.encode(tokens)),
        attn_mask=(1,) * len(tokens),
        pos_cls=0,
        pos_mask=position(MASK),
        pos_e1s=position(E1S) if instance else None,
        pos_e2s=position(E2S) if instance else None,
        kind=kind,
    )


def encode_instance(inst: RelationInstance, vocab: Vocab, max_len: int) -> EncodedInput:
    return tokenize_encode(render_instance_template(inst), vocab, max_len, InputKind.INSTANCE)


def encode_description(desc: RelationDescription, vocab: Vocab, max_len: int) -> EncodedInput:
    return tokenize_encode(render_description_template(desc), vocab, max_len, InputKind.DESCRIPTION)


def decode(encoded: EncodedInput, vocab: Vocab) -> list[str]:
    """Tokens of the real (unpadded) positions."""
    return vocab.decode(i for i, m in zip(encoded.ids, encoded.attn_mask) if m)


@dataclass(frozen=True)
class PaddedBatch:
    """
    Right-padded batch of encoded inputs.

    Attributes:
        ids: [B, T] token ids.
        attn_mask: [B, T], 1 for real tokens and 0 for padding.
        inputs: The encoded inputs, in batch order.
    """
    ids: np.ndarray
    attn_mask: np.ndarray
    inputs: tuple[EncodedInput, ...]

    @property
    def size(self) -> int:
        return self.ids.shape[0]

    @property
    def width(self) -> int:
        return self.ids.shape[1]

    def select(self, rows: Sequence[int]) -> "PaddedBatch":
        """Sub-batch of the given rows; the width is unchanged."""
        rows = np.asarray(rows, dtype=np.int64)
        return PaddedBatch(
            ids=self.ids[rows],
            attn_mask=self.attn_mask[rows],
            inputs=tuple(self.inputs[int(i)] for i in rows),
        )

    def positions(self, name: str) -> np.ndarray:
        """
        Per-row position of a special token.

        Args:
            name: One of "cls", "mask", "e1s", "e2s".

        Raises:
            ContractError: If any row lacks that position.
        """
        values = [getattr(item, f"pos_{name}") for item in self.inputs]
        if any(v is None for v in values):
            raise ContractError(f"batch has rows without a {name} position")
        return np.asarray(values, dtype=np.int64)


def pad_batch(inputs: Sequence[EncodedInput], pad_id: int = 0) -> PaddedBatch:
    """
    Right-pad inputs to the longest length.

    Raises:
        ContractError: If inputs is empty.
    """
    if not inputs:
        raise ContractError("pad_batch needs at least one input")
    width = max(len(item) for item in inputs)
    ids = np.full((len(inputs), width), pad_id, dtype=np.int64)
    mask = np.zeros((len(inputs), width), dtype=np.int64)
    for row, item in enumerate(inputs):
        ids[row, :len(item)] = item.ids
        mask[row, :len(item)] = item.attn_mask
    ids.setflags(write=False)
    mask.setflags(write=False)
    return PaddedBatch(ids=ids, attn_mask=mask, inputs=tuple(inputs))
