"""
Transformer encoder forward pass.

Token and learned position embeddings followed by post-norm blocks:
masked multi-head self-attention, residual, layer norm, GELU
feed-forward, residual, layer norm.
"""

from dataclasses import dataclass, field
from threading import Lock
from typing import Optional

import numpy as np

from multirep.autodiff import Mode, RandomStream, Tensor, ops
from multirep.encoder.config import EncoderConfig
from multirep.encoder.params import EncoderParams
from multirep.exceptions import ContractError, EncodingError
from multirep.textproc import PaddedBatch


# Added to attention scores of padded keys; exp() of it underflows to 0.
MASKED_SCORE = -1e9


@dataclass
class EncoderOutput:
    """
    Encoder results for one batch.

    Attributes:
        hidden: [B, T, d] final hidden states.
        attentions: Per layer, [B, h, T, T] attention probabilities
            before dropout.
    """
    hidden: Tensor
    attentions: list[Tensor] = field(default_factory=list)


def _linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return ops.add(ops.matmul(x, weight), bias)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    b, t, d = x.shape
    return ops.transpose(ops.reshape(x, (b, t, heads, d // heads)), (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    b, h, t, k = x.shape
    return ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (b, t, h * k))


def _block(
    x: Tensor,
    params: EncoderParams,
    prefix: str,
    config: EncoderConfig,
    key_bias: Tensor,
    mode: Mode,
    stream: Optional[RandomStream],
) -> tuple[Tensor, Tensor]:
    p = lambda name: params[f"{prefix}.{name}"]
    rate = config.dropout

    q = _split_heads(_linear(x, p("attn.wq"), p("attn.bq")), config.heads)
    k = _split_heads(_linear(x, p("attn.wk"), p("attn.bk")), config.heads)
    v = _split_heads(_linear(x, p("attn.wv"), p("attn.bv")), config.heads)

    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(config.head_dim))
    probs = ops.softmax(ops.add(scores, key_bias), axis=-1)
    context = _merge_heads(ops.matmul(ops.dropout(probs, rate, mode, stream), v))

    attended = ops.dropout(_linear(context, p("attn.wo"), p("attn.bo")), rate, mode, stream)
    x = ops.layer_norm(ops.add(x, attended), p("ln1.gamma"), p("ln1.beta"), config.layer_norm_eps)

    inner = ops.gelu(_linear(x, p("ffn.w1"), p("ffn.b1")))
    fed = ops.dropout(_linear(inner, p("ffn.w2"), p("ffn.b2")), rate, mode, stream)
    x = ops.layer_norm(ops.add(x, fed), p("ln2.gamma"), p("ln2.beta"), config.layer_norm_eps)
    return x, probs


def encode(
    params: EncoderParams,
    config: EncoderConfig,
    ids: np.ndarray,
    attn_mask: np.ndarray,
    mode: Mode = Mode.EVAL,
    stream: Optional[RandomStream] = None,
) -> EncoderOutput:
    """
    Run the encoder on a padded batch.

    Args:
        params: Encoder weights.
        config: Encoder shape.
        ids: [B, T] token ids.
        attn_mask: [B, T], 1 for real tokens, 0 for padding.
        mode: Train enables dropout; eval is deterministic.
        stream: Random stream for dropout; required in train mode when
            the dropout rate is positive.

    Returns:
        EncoderOutput with [B, T, d] hidden states.

    Raises:
        EncodingError: If T exceeds the position table.
        ContractError: If ids fall outside the vocabulary or the mask
            does not match.
    """
    ids = np.asarray(ids, dtype=np.int64)
    attn_mask = np.asarray(attn_mask)
    if ids.ndim != 2 or attn_mask.shape != ids.shape:
        raise ContractError(f"ids {ids.shape} and mask {attn_mask.shape} must be equal 2-D shapes")
    batch, width = ids.shape
    if width > config.max_positions:
        raise EncodingError(f"sequence width {width} exceeds {config.max_positions} positions")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ContractError("token id outside the vocabulary")

    x = ops.add(
        ops.embedding(params["embeddings.token"], ids),
        ops.gather_rows(params["embeddings.position"], np.arange(width)),
    )
    x = ops.dropout(x, config.dropout, mode, stream)

    bias = np.where(attn_mask.astype(bool), 0.0, MASKED_SCORE).reshape(batch, 1, 1, width)
    key_bias = Tensor(bias)

    attentions = []
    for i in range(config.layers):
        x, probs = _block(x, params, f"layers.{i}", config, key_bias, mode, stream)
        attentions.append(probs)
    return EncoderOutput(hidden=x, attentions=attentions)


class TransformerEncoder:
    """
    Encoder bound to its config and weights.

    Counts forward passes so callers can check that every sentence is
    encoded once per step.

    Example:
        encoder = TransformerEncoder(config, init_params(config, seed=0))
        out = encoder(batch, Mode.EVAL)
        out.hidden.shape   # (B, T, d)
    """

    def __init__(self, config: EncoderConfig, params: EncoderParams):
        params.check_config(config)
        self.config = config
        self.params = params
        self._calls = 0
        self._lock = Lock()

    @property
    def calls(self) -> int:
        """Number of forward passes so far."""
        return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0

    def __call__(
        self,
        batch: PaddedBatch,
        mode: Mode = Mode.EVAL,
        stream: Optional[RandomStream] = None,
    ) -> EncoderOutput:
        with self._lock:
            self._calls += 1
        return encode(self.params, self.config, batch.ids, batch.attn_mask, mode, stream)

    def set_params(self, params: EncoderParams) -> None:
        """Swap in new weights of the same shapes."""
        params.check_config(self.config)
        with self._lock:
            self.params = params
