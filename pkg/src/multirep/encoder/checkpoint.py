"""
Checkpoint files.

A checkpoint directory holds:

- ``params.bin``: magic ``MREP``, uint32 format version, uint32 manifest
  length, a JSON manifest (name, shape, dtype, offset, nbytes per tensor)
  and the raw little-endian tensor bytes, in manifest order.
- ``config.json``: the run configuration that produced it.
- ``vocab.txt``: the vocabulary, one token per line.

Nothing time-dependent is written, so equal parameters give equal bytes.
"""

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Union

import numpy as np

from multirep.encoder.params import EncoderParams
from multirep.exceptions import CheckpointError
from multirep.textproc import Vocab


logger = logging.getLogger(__name__)

MAGIC = b"MREP"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sII")

PARAMS_FILE = "params.bin"
CONFIG_FILE = "config.json"
VOCAB_FILE = "vocab.txt"

PathLike = Union[str, Path]


def serialize_params(arrays: Mapping[str, np.ndarray]) -> bytes:
    """Encode named arrays into the params.bin layout."""
    entries = []
    blobs = []
    offset = 0
    for name, array in arrays.items():
        array = np.ascontiguousarray(array)
        little = array.astype(array.dtype.newbyteorder("<"), copy=False)
        blob = little.tobytes()
        entries.append({
            "name": name,
            "shape": list(array.shape),
            "dtype": little.dtype.str,
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)

    manifest = json.dumps(
        {"tensors": entries}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    return HEADER.pack(MAGIC, FORMAT_VERSION, len(manifest)) + manifest + b"".join(blobs)


def deserialize_params(data: bytes) -> dict[str, np.ndarray]:
    """
    Decode the params.bin layout.

    Raises:
        CheckpointError: On a bad magic, an unknown version, or a
            truncated or inconsistent body.
    """
    if len(data) < HEADER.size:
        raise CheckpointError("checkpoint is shorter than its header")
    magic, version, manifest_len = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError("not a MultiRep parameter file")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
        )
    body_start = HEADER.size + manifest_len
    try:
        manifest = json.loads(data[HEADER.size:body_start].decode("utf-8"))
        entries = manifest["tensors"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise CheckpointError(f"corrupt checkpoint manifest: {e}") from e

    arrays: dict[str, np.ndarray] = {}
    body = memoryview(data)[body_start:]
    for entry in entries:
        start, size = entry["offset"], entry["nbytes"]
        if start + size > len(body):
            raise CheckpointError(f"tensor '{entry['name']}' runs past the end of the file")
        try:
            array = np.frombuffer(body[start:start + size], dtype=np.dtype(entry["dtype"]))
            arrays[entry["name"]] = array.reshape(entry["shape"]).copy()
        except (TypeError, ValueError) as e:
            raise CheckpointError(f"tensor '{entry['name']}': {e}") from e
    return arrays


def write_params(path: PathLike, params: EncoderParams) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_params(params.arrays()))


def read_params(path: PathLike) -> EncoderParams:
    """
    Raises:
        CheckpointError: If the file is missing or malformed.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read {path}: {e}") from e
    return EncoderParams.from_arrays(deserialize_params(data))


@dataclass
class Checkpoint:
    """
    Everything needed to rebuild a trained model.

    Attributes:
        params: Encoder weights.
        config: Run configuration as a plain dict.
        vocab: Vocabulary the ids refer to.
    """
    params: EncoderParams
    config: dict[str, Any]
    vocab: Vocab

    def save(self, directory: PathLike) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_params(directory / PARAMS_FILE, self.params)
        (directory / CONFIG_FILE).write_text(
            json.dumps(self.config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        self.vocab.save(directory / VOCAB_FILE)
        logger.info("Saved checkpoint to %s", directory)
        return directory

    @classmethod
    def load(cls, directory: PathLike) -> "Checkpoint":
        """
        Raises:
            CheckpointError: If any of the three files is missing or malformed.
        """
        directory = Path(directory)
        if not directory.is_dir():
            raise CheckpointError(f"checkpoint directory {directory} does not exist")
        try:
            config = json.loads((directory / CONFIG_FILE).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise CheckpointError(f"cannot read {directory / CONFIG_FILE}: {e}") from e
        checkpoint = cls(
            params=read_params(directory / PARAMS_FILE),
            config=config,
            vocab=Vocab.load(directory / VOCAB_FILE),
        )
        logger.info("Loaded checkpoint from %s", directory)
        return checkpoint
