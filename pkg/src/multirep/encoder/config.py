"""
Encoder configuration.
"""

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping

from multirep.exceptions import ConfigurationError


@dataclass(frozen=True)
class EncoderConfig:
    """
    Shape of the transformer encoder.

    Defaults are the desk-scale model: two layers, 64 hidden units,
    four heads.

    Attributes:
        vocab_size: Number of token ids; 0 until a vocabulary is attached.
        layers: Number of transformer blocks.
        hidden: Hidden size d.
        heads: Attention heads; must divide hidden.
        ff: Feed-forward inner size.
        dropout: Rate for embedding, attention and sublayer dropout.
        max_positions: Longest sequence the position table covers.
        layer_norm_eps: Variance floor inside layer norm.
    """
    vocab_size: int = 0
    layers: int = 2
    hidden: int = 64
    heads: int = 4
    ff: int = 128
    dropout: float = 0.1
    max_positions: int = 128
    layer_norm_eps: float = 1e-12

    def __post_init__(self) -> None:
        if self.vocab_size < 0:
            raise ConfigurationError("encoder vocab_size must not be negative")
        for name in ("layers", "hidden", "heads", "ff", "max_positions"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"encoder {name} must be positive")
        if self.hidden % self.heads:
            raise ConfigurationError(
                f"hidden size {self.hidden} is not divisible by {self.heads} heads"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("encoder dropout must be in [0, 1)")
        if self.layer_norm_eps <= 0:
            raise ConfigurationError("layer_norm_eps must be positive")

    def with_vocab_size(self, vocab_size: int) -> "EncoderConfig":
        return replace(self, vocab_size=vocab_size)

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EncoderConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown encoder settings: {', '.join(unknown)}")
        return cls(**data)
