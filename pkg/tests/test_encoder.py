"""
Tests for the transformer encoder.

Tests cover:
- Encoder configuration validation
- Seeded parameter initialisation and parameter counts
- Forward pass shapes, modes, padding and attention masking
- Parameter files and checkpoint directories
"""

from dataclasses import replace

import numpy as np
import pytest

from multirep.autodiff import Mode, RandomStream
from multirep.encoder import (
    Checkpoint,
    EncoderConfig,
    TransformerEncoder,
    deserialize_params,
    encode,
    init_params,
    parameter_shapes,
    read_params,
    serialize_params,
    write_params,
)
from multirep.encoder.checkpoint import HEADER, MAGIC
from multirep.exceptions import CheckpointError, ConfigurationError, ContractError, EncodingError
from multirep.textproc import pad_batch


SMALL = EncoderConfig(vocab_size=20, layers=2, hidden=8, heads=2, ff=16, dropout=0.1, max_positions=12)


def batch_arrays(rows):
    """ids/mask arrays for right-padded id rows."""
    width = max(len(r) for r in rows)
    ids = np.zeros((len(rows), width), dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=np.int64)
    for i, row in enumerate(rows):
        ids[i, :len(row)] = row
        mask[i, :len(row)] = 1
    return ids, mask


class TestEncoderConfig:
    """Test configuration checks."""

    def test_defaults(self):
        """Test the default shape."""
        config = EncoderConfig()
        assert (config.layers, config.hidden, config.heads, config.ff) == (2, 64, 4, 128)
        assert config.head_dim == 16

    @pytest.mark.parametrize(
        "kwargs",
        [{"hidden": 10, "heads": 3}, {"layers": 0}, {"dropout": 1.0}, {"vocab_size": -1}],
    )
    def test_invalid(self, kwargs):
        """Test invalid shapes are rejected."""
        with pytest.raises(ConfigurationError):
            EncoderConfig(**kwargs)

    def test_dict_round_trip(self):
        """Test to_dict/from_dict."""
        assert EncoderConfig.from_dict(SMALL.to_dict()) == SMALL
        with pytest.raises(ConfigurationError):
            EncoderConfig.from_dict({"depth": 3})


class TestInitialisation:
    """Test parameter initialisation."""

    def test_same_seed_same_params(self):
        """Test initialisation is a function of the seed."""
        assert init_params(SMALL, seed=4).equals(init_params(SMALL, seed=4))
        assert not init_params(SMALL, seed=4).equals(init_params(SMALL, seed=5))

    def test_shapes_match_config(self):
        """Test every tensor has its configured shape."""
        params = init_params(SMALL, seed=0)
        assert {name: params[name].shape for name in params.names} == parameter_shapes(SMALL)
        assert params["layers.1.ffn.w1"].shape == (8, 16)
        np.testing.assert_array_equal(params["layers.0.ln1.gamma"].data, np.ones(8))
        np.testing.assert_array_equal(params["layers.0.attn.bq"].data, np.zeros(8))

    def test_parameter_count(self):
        """Test the total number of scalars."""
        v, p, d, f, layers = 20, 12, 8, 16, 2
        per_layer = 4 * d * d + 4 * d + 2 * d + d * f + f + f * d + d + 2 * d
        assert init_params(SMALL, 0).num_parameters() == v * d + p * d + layers * per_layer

    def test_needs_vocab_size(self):
        """Test a config without vocabulary cannot be initialised."""
        with pytest.raises(ConfigurationError):
            init_params(EncoderConfig(), seed=0)

    def test_replace_checks_shape(self):
        """Test replace refuses shape changes."""
        params = init_params(SMALL, 0)
        with pytest.raises(ContractError):
            params.replace({"layers.0.attn.bq": np.zeros(3)})
        updated = params.replace({"layers.0.attn.bq": np.ones(8)})
        np.testing.assert_array_equal(updated["layers.0.attn.bq"].data, np.ones(8))
        np.testing.assert_array_equal(params["layers.0.attn.bq"].data, np.zeros(8))


class TestForward:
    """Test the forward pass."""

    @pytest.fixture
    def params(self):
        return init_params(SMALL, seed=1)

    def test_output_shape(self, params):
        """Test hidden and attention shapes."""
        ids, mask = batch_arrays([[2, 5, 6, 7], [2, 9]])
        out = encode(params, SMALL, ids, mask)
        assert out.hidden.shape == (2, 4, 8)
        assert len(out.attentions) == 2
        assert out.attentions[0].shape == (2, 2, 4, 4)

    def test_eval_is_deterministic(self, params):
        """Test eval mode gives identical outputs."""
        ids, mask = batch_arrays([[2, 5, 6, 7]])
        first = encode(params, SMALL, ids, mask, Mode.EVAL).hidden.data
        np.testing.assert_array_equal(encode(params, SMALL, ids, mask, Mode.EVAL).hidden.data, first)

    def test_train_mode_replays_stream(self, params):
        """Test equal streams give equal train-mode outputs, different from eval."""
        ids, mask = batch_arrays([[2, 5, 6, 7, 8, 9]])
        first = encode(params, SMALL, ids, mask, Mode.TRAIN, RandomStream(3, "enc")).hidden.data
        again = encode(params, SMALL, ids, mask, Mode.TRAIN, RandomStream(3, "enc")).hidden.data
        evaluated = encode(params, SMALL, ids, mask, Mode.EVAL).hidden.data
        np.testing.assert_array_equal(first, again)
        assert not np.allclose(first, evaluated)

    def test_padding_invariance(self, params):
        """Test extra padding leaves real positions unchanged."""
        ids, mask = batch_arrays([[2, 5, 6]])
        alone = encode(params, SMALL, ids, mask).hidden.data
        ids_padded, mask_padded = batch_arrays([[2, 5, 6], [2, 5, 6, 7, 8, 9, 10]])
        padded = encode(params, SMALL, ids_padded, mask_padded).hidden.data
        np.testing.assert_allclose(padded[0, :3], alone[0], atol=1e-5)

    def test_padded_keys_get_no_attention(self, params):
        """Test attention to padded columns is exactly zero."""
        ids, mask = batch_arrays([[2, 5], [2, 5, 6, 7]])
        out = encode(params, SMALL, ids, mask)
        for probs in out.attentions:
            assert np.all(probs.data[0, :, :, 2:] == 0.0)
            np.testing.assert_allclose(probs.data.sum(axis=-1), 1.0, rtol=1e-5)

    def test_too_long(self, params):
        """Test sequences longer than the position table."""
        ids, mask = batch_arrays([list(range(2, 15))])
        with pytest.raises(EncodingError):
            encode(params, SMALL, ids, mask)

    def test_unknown_id(self, params):
        """Test ids outside the vocabulary."""
        ids, mask = batch_arrays([[2, 25]])
        with pytest.raises(ContractError):
            encode(params, SMALL, ids, mask)

    def test_mask_shape(self, params):
        """Test mismatched mask shapes."""
        ids, _ = batch_arrays([[2, 5]])
        with pytest.raises(ContractError):
            encode(params, SMALL, ids, np.ones((1, 3)))


class TestTransformerEncoder:
    """Test the bound encoder."""

    def test_counts_calls(self, toy):
        """Test forward passes are counted."""
        episode, vocab = toy
        config = replace(SMALL, vocab_size=len(vocab), max_positions=32)
        encoder = TransformerEncoder(config, init_params(config, 0))
        batch = pad_batch(episode.encode(vocab, 32).support.inputs, vocab.pad_id)
        encoder(batch)
        encoder(batch)
        assert encoder.calls == 2
        encoder.reset_calls()
        assert encoder.calls == 0

    def test_set_params_checks_shapes(self):
        """Test weights of another shape are rejected."""
        encoder = TransformerEncoder(SMALL, init_params(SMALL, 0))
        other = EncoderConfig(vocab_size=20, layers=1, hidden=8, heads=2, ff=16, max_positions=12)
        with pytest.raises(ContractError):
            encoder.set_params(init_params(other, 0))


class TestCheckpoint:
    """Test parameter files and checkpoint directories."""

    def test_params_round_trip(self, tmp_path):
        """Test write then read gives equal parameters."""
        params = init_params(SMALL, 2)
        path = tmp_path / "params.bin"
        write_params(path, params)
        assert read_params(path).equals(params)

    def test_byte_identical(self):
        """Test equal parameters serialize to equal bytes."""
        arrays = init_params(SMALL, 2).arrays()
        assert serialize_params(arrays) == serialize_params(init_params(SMALL, 2).arrays())

    def test_bad_magic(self):
        """Test foreign files are rejected."""
        data = serialize_params(init_params(SMALL, 0).arrays())
        with pytest.raises(CheckpointError):
            deserialize_params(b"XXXX" + data[4:])

    def test_unknown_version(self):
        """Test files from another format version are rejected."""
        data = serialize_params(init_params(SMALL, 0).arrays())
        _, _, manifest_len = HEADER.unpack_from(data)
        with pytest.raises(CheckpointError, match="version 99"):
            deserialize_params(HEADER.pack(MAGIC, 99, manifest_len) + data[HEADER.size:])

    def test_truncated(self):
        """Test a cut-off file is rejected."""
        data = serialize_params(init_params(SMALL, 0).arrays())
        with pytest.raises(CheckpointError):
            deserialize_params(data[:-10])
        with pytest.raises(CheckpointError):
            deserialize_params(data[:5])

    def test_directory_round_trip(self, toy, tmp_path):
        """Test save/load of params, config and vocabulary."""
        _, vocab = toy
        config = SMALL.with_vocab_size(len(vocab))
        checkpoint = Checkpoint(init_params(config, 0), {"encoder": config.to_dict()}, vocab)
        checkpoint.save(tmp_path / "best")
        loaded = Checkpoint.load(tmp_path / "best")
        assert loaded.params.equals(checkpoint.params)
        assert loaded.config == checkpoint.config
        assert loaded.vocab == vocab
        assert {p.name for p in (tmp_path / "best").iterdir()} == {"params.bin", "config.json", "vocab.txt"}

    def test_missing_directory(self, tmp_path):
        """Test loading a missing checkpoint."""
        with pytest.raises(CheckpointError):
            Checkpoint.load(tmp_path / "nowhere")
