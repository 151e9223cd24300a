"""
Text processing layer for MultiRep.

Vocabulary building, entity markers, the fixed prompt templates, id
encoding with special-token-preserving truncation, and batch padding.
"""

from multirep.textproc.encoding import (
    EncodedInput,
    InputKind,
    PaddedBatch,
    decode,
    encode_description,
    encode_instance,
    pad_batch,
    tokenize_encode,
    truncate,
)
from multirep.textproc.templates import (
    apply_entity_markers,
    render_description_template,
    render_instance_template,
)
from multirep.textproc.vocab import SPECIAL_TOKENS, TEMPLATE_TOKENS, Vocab, build_vocab

__all__ = [
    # Vocabulary
    "Vocab",
    "build_vocab",
    "SPECIAL_TOKENS",
    "TEMPLATE_TOKENS",
    # Templates
    "apply_entity_markers",
    "render_instance_template",
    "render_description_template",
    # Encoding
    "EncodedInput",
    "InputKind",
    "PaddedBatch",
    "tokenize_encode",
    "encode_instance",
    "encode_description",
    "truncate",
    "decode",
    "pad_batch",
]
