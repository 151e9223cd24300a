"""
Encoder layer for MultiRep.

A small trainable transformer encoder, its named parameters, and the
versioned checkpoint format.
"""

from multirep.encoder.checkpoint import (
    Checkpoint,
    FORMAT_VERSION,
    deserialize_params,
    read_params,
    serialize_params,
    write_params,
)
from multirep.encoder.config import EncoderConfig
from multirep.encoder.model import EncoderOutput, TransformerEncoder, encode
from multirep.encoder.params import EncoderParams, init_params, parameter_shapes

__all__ = [
    "EncoderConfig",
    "EncoderParams",
    "init_params",
    "parameter_shapes",
    "EncoderOutput",
    "TransformerEncoder",
    "encode",
    "Checkpoint",
    "FORMAT_VERSION",
    "serialize_params",
    "deserialize_params",
    "write_params",
    "read_params",
]
