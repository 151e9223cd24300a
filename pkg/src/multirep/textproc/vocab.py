"""
Whitespace vocabulary with fixed special tokens.
"""

import logging
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from multirep.corpus.models import DatasetSplit, RelationDescription
from multirep.exceptions import CheckpointError, ValidationError


logger = logging.getLogger(__name__)

PAD = "[PAD]"
UNK = "[UNK]"
CLS = "[CLS]"
SEP = "[SEP]"
MASK = "[MASK]"
E1S = "[E1S]"
E1E = "[E1E]"
E2S = "[E2S]"
E2E = "[E2E]"

# Order fixes the special ids: PAD is 0.
SPECIAL_TOKENS: tuple[str, ...] = (PAD, UNK, CLS, SEP, MASK, E1S, E1E, E2S, E2E)
MARKER_TOKENS: frozenset[str] = frozenset((E1S, E1E, E2S, E2E))

COMMA = ","
COLON = ":"

# Fixed template punctuation; always in a built vocabulary, right after the specials.
TEMPLATE_TOKENS: tuple[str, ...] = (COMMA, COLON)


def normalize(token: str) -> str:
    """Lowercase surface tokens; specials pass through."""
    return token if token in SPECIAL_TOKENS else token.lower()


class Vocab:
    """
    Token to id mapping.

    The first ids always belong to SPECIAL_TOKENS, in that order. Surface
    tokens are lowercased on lookup; unknown tokens map to [UNK].

    Example:
        vocab = build_vocab([train_split], descriptions, min_freq=1)
        vocab.encode_token("Mary")   # id of "mary"
        vocab.token(vocab.mask_id)   # "[MASK]"
    """

    def __init__(self, tokens: Sequence[str]):
        """
        Args:
            tokens: Full ordered token list, specials first.

        Raises:
            ValidationError: If the specials are missing or tokens repeat.
        """
        tokens = list(tokens)
        if tuple(tokens[:len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ValidationError("vocabulary must start with the special tokens")
        if len(set(tokens)) != len(tokens):
            raise ValidationError("vocabulary contains repeated tokens")
        self._tokens = tokens
        self._ids = {token: i for i, token in enumerate(tokens)}

    # --- Special ids ---

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def cls_id(self) -> int:
        return self._ids[CLS]

    @property
    def sep_id(self) -> int:
        return self._ids[SEP]

    @property
    def mask_id(self) -> int:
        return self._ids[MASK]

    @property
    def e1s_id(self) -> int:
        return self._ids[E1S]

    @property
    def e2s_id(self) -> int:
        return self._ids[E2S]

    # --- Lookup ---

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def encode_token(self, token: str) -> int:
        return self._ids.get(normalize(token), self.unk_id)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.encode_token(t) for t in tokens]

    def token(self, token_id: int) -> str:
        return self._tokens[token_id]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._tokens[i] for i in ids]

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: object) -> bool:
        return isinstance(token, str) and normalize(token) in self._ids

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocab):
            return NotImplemented
        return self._tokens == other._tokens

    def __repr__(self) -> str:
        return f"Vocab(size={len(self)})"

    # --- Persistence ---

    def save(self, path: Union[str, Path]) -> None:
        """Write one token per line, in id order."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self._tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocab":
        """
        Raises:
            CheckpointError: If the file is unreadable or malformed.
        """
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise CheckpointError(f"cannot read vocabulary {path}: {e}") from e
        try:
            return cls([line for line in lines if line])
        except ValidationError as e:
            raise CheckpointError(f"{path}: {e}") from e


def build_vocab(
    splits: Iterable[DatasetSplit],
    descriptions: Optional[Mapping[str, RelationDescription]] = None,
    min_freq: int = 1,
) -> Vocab:
    """
    Count lowercased whitespace tokens and assign ids.

    The specials come first, then the template punctuation, then counted
    tokens by descending frequency, ties alphabetically, so the same
    corpus always gives the same ids. Tokens seen fewer than
    ``min_freq`` times are left out and encode as [UNK].

    Args:
        splits: Splits whose instance tokens are counted.
        descriptions: Descriptions whose names and texts are counted.
        min_freq: Minimum count for a token to get its own id.

    Raises:
        ValidationError: If there is nothing to count.
    """
    counts: Counter[str] = Counter()
    for split in splits:
        for inst in split.iter_instances():
            counts.update(normalize(t) for t in inst.tokens)
    for desc in (descriptions or {}).values():
        counts.update(normalize(t) for t in desc.name.split())
        counts.update(normalize(t) for t in desc.description_text.split())

    if not counts:
        raise ValidationError("cannot build a vocabulary from an empty corpus")

    fixed = SPECIAL_TOKENS + TEMPLATE_TOKENS
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq and t not in fixed),
        key=lambda t: (-counts[t], t),
    )
    vocab = Vocab(list(fixed) + kept)
    logger.info("Built vocabulary: %d tokens (min_freq=%d)", len(vocab), min_freq)
    return vocab
