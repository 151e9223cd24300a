"""
Tests for representation selection, extraction and export.

Tests cover:
- Selector expansion, ordering, ablation and subsets
- Pooling and position extraction, including gradients
- Instance and description embeddings from a real encoder pass
- Embedding CSV export
"""

import numpy as np
import pytest

from multirep.autodiff import ComputationRecord, Mode, RandomStream, Tensor, backward
from multirep.encoder import EncoderConfig, encode, init_params
from multirep.exceptions import ConfigurationError, ContractError
from multirep.representation import (
    EmbeddingRow,
    RepSelector,
    build_description_embedding,
    build_instance_embedding,
    description_repset,
    extract_at,
    extract_avg,
    extract_entity_markers,
    instance_repset,
    read_embeddings_csv,
    rows_from_matrix,
    write_embeddings_csv,
)


D = 8


@pytest.fixture
def hidden_of(toy):
    """Encoded toy episode and a function giving eval-mode hidden states of a batch."""
    episode, vocab = toy
    config = EncoderConfig(
        vocab_size=len(vocab), layers=1, hidden=D, heads=2, ff=16, dropout=0.0, max_positions=32
    )
    params = init_params(config, seed=0)

    def run(batch):
        return encode(params, config, batch.ids, batch.attn_mask).hidden

    return episode.encode(vocab, 32), run


class TestSelector:
    """Test representation selectors."""

    def test_full(self):
        """Test the default selector holds all five components."""
        selector = RepSelector.full()
        assert selector.components == ("avg_pool", "cls", "mask", "e1s", "e2s")
        assert selector.m == 5
        assert selector.units == ("avg_pool", "cls", "mask", "entity_pair")

    def test_entity_pair_expands(self):
        """Test the entity_pair unit gives both marker components in fixed order."""
        selector = RepSelector(("entity_pair", "mask"))
        assert selector.components == ("mask", "e1s", "e2s")
        assert selector.needs_entity_markers

    def test_single_string(self):
        """Test a bare tag is accepted."""
        assert RepSelector("cls").components == ("cls",)

    def test_without(self):
        """Test dropping a unit."""
        selector = RepSelector.full().without("entity_pair")
        assert selector.m == 3
        assert not selector.needs_entity_markers
        assert RepSelector.full().without("cls").label == "avg_pool+mask+e1s+e2s"

    def test_description_partners(self):
        """Test description slots pair with instance slots."""
        selector = RepSelector(("cls", "e1s", "e2s"))
        assert selector.description_components == ("cls", "cls_drop", "mask_drop")

    def test_subsets(self):
        """Test subset counts are binomial coefficients."""
        full = RepSelector.full()
        assert [len(full.subsets(m)) for m in range(1, 6)] == [5, 10, 10, 5, 1]

    @pytest.mark.parametrize("components", [(), ("pooler",)])
    def test_invalid(self, components):
        """Test empty and unknown selections."""
        with pytest.raises(ConfigurationError):
            RepSelector(components)

    def test_invalid_dropout(self):
        """Test the description dropout range."""
        with pytest.raises(ConfigurationError):
            RepSelector.full(description_dropout=1.0)

    def test_dict_round_trip(self):
        """Test to_dict/from_dict."""
        selector = RepSelector(("mask", "cls"), 0.2)
        assert RepSelector.from_dict(selector.to_dict()) == selector
        with pytest.raises(ConfigurationError):
            RepSelector.from_dict({"tags": ["cls"]})


class TestExtraction:
    """Test pooling and position reads."""

    def test_masked_average(self):
        """Test padded rows are left out of the average."""
        hidden = Tensor([[[1.0, 1.0], [3.0, 3.0], [100.0, 100.0]]])
        np.testing.assert_allclose(extract_avg(hidden, np.array([[1, 1, 0]])).data, [[2.0, 2.0]])

    def test_fully_masked(self):
        """Test averaging nothing is an error."""
        with pytest.raises(ContractError):
            extract_avg(Tensor(np.ones((1, 2, 2))), np.zeros((1, 2)))

    def test_extract_at(self):
        """Test single-sequence and batch reads."""
        single = Tensor([[1.0, 2.0], [5.0, 6.0]])
        np.testing.assert_allclose(extract_at(single, 1).data, [5.0, 6.0])
        batch = Tensor(np.arange(12.0).reshape(2, 3, 2))
        np.testing.assert_allclose(extract_at(batch, [0, 2]).data, [[0.0, 1.0], [10.0, 11.0]])

    def test_out_of_range(self):
        """Test positions past the width."""
        with pytest.raises(ContractError):
            extract_at(Tensor(np.ones((2, 2))), 5)

    def test_gradient_only_at_position(self):
        """Test the gradient of a read lands on that row alone."""
        hidden = Tensor(np.arange(12.0).reshape(2, 3, 2), requires_grad=True)
        with ComputationRecord():
            grads = backward(extract_at(hidden, [0, 2]).sum())
        expected = np.zeros((2, 3, 2))
        expected[0, 0] = 1.0
        expected[1, 2] = 1.0
        np.testing.assert_array_equal(grads[hidden], expected)

    def test_entity_markers_need_positions(self):
        """Test descriptions have no entity markers."""
        with pytest.raises(ContractError):
            extract_entity_markers(Tensor(np.ones((2, 2))), None, None)


class TestEmbeddings:
    """Test embeddings built from one encoder pass."""

    def test_full_instance_embedding(self, hidden_of):
        """Test five components concatenate to 5d."""
        encoded, run = hidden_of
        selector = RepSelector.full()
        repset = instance_repset(run(encoded.support), encoded.support, selector)
        assert build_instance_embedding(repset, selector).shape == (2, 5 * D)

    @pytest.mark.parametrize("tags", [("cls",), ("mask", "entity_pair"), ("avg_pool", "cls", "mask", "e1s", "e2s")])
    def test_squared_norm_is_sum_of_parts(self, hidden_of, tags):
        """Test the squared norm of R is the sum of its components' squared norms."""
        encoded, run = hidden_of
        selector = RepSelector(tags)
        for batch in (encoded.support, encoded.query):
            repset = instance_repset(run(batch), batch, selector)
            embedding = build_instance_embedding(repset, selector).data.astype(np.float64)
            parts = sum(np.sum(repset[c].data.astype(np.float64) ** 2, axis=-1) for c in selector.components)
            np.testing.assert_allclose(np.sum(embedding ** 2, axis=-1), parts, rtol=1e-9)

    def test_ablated_embedding(self, hidden_of):
        """Test dropping entity_pair leaves 3d."""
        encoded, run = hidden_of
        selector = RepSelector.full().without("entity_pair")
        repset = instance_repset(run(encoded.support), encoded.support, selector)
        assert build_instance_embedding(repset, selector).shape == (2, 3 * D)
        assert "e1s" not in repset

    def test_single_component_is_that_vector(self, hidden_of):
        """Test a cls-only embedding equals the [CLS] row."""
        encoded, run = hidden_of
        hidden = run(encoded.support)
        embedding = build_instance_embedding(instance_repset(hidden, encoded.support, RepSelector("cls")), RepSelector("cls"))
        np.testing.assert_array_equal(embedding.data, hidden.data[:, 0, :])

    def test_entity_vectors_read_marker_rows(self, hidden_of):
        """Test e1s and e2s are the rows at the marker positions."""
        encoded, run = hidden_of
        hidden = run(encoded.support)
        repset = instance_repset(hidden, encoded.support)
        e1s = encoded.support.positions("e1s")
        np.testing.assert_array_equal(repset["e1s"].data, hidden.data[np.arange(2), e1s])

    def test_description_eval_copies(self, hidden_of):
        """Test eval-mode dropout slots equal the plain [CLS] and [MASK] slots."""
        encoded, run = hidden_of
        embedding = build_description_embedding(
            run(encoded.descriptions), encoded.descriptions, 0.5, Mode.EVAL
        ).data
        assert embedding.shape == (2, 5 * D)
        slots = embedding.reshape(2, 5, D)
        np.testing.assert_array_equal(slots[:, 3], slots[:, 1])
        np.testing.assert_array_equal(slots[:, 4], slots[:, 2])

    def test_description_train_dropout(self, hidden_of):
        """Test train-mode dropout slots replay from the stream and differ from eval."""
        encoded, run = hidden_of
        hidden = run(encoded.descriptions)
        first = build_description_embedding(
            hidden, encoded.descriptions, 0.5, Mode.TRAIN, RandomStream(1, "desc")
        ).data
        again = build_description_embedding(
            hidden, encoded.descriptions, 0.5, Mode.TRAIN, RandomStream(1, "desc")
        ).data
        evaluated = build_description_embedding(hidden, encoded.descriptions, 0.5, Mode.EVAL).data
        np.testing.assert_array_equal(first, again)
        assert not np.array_equal(first, evaluated)
        np.testing.assert_array_equal(first[:, :3 * D], evaluated[:, :3 * D])

    def test_description_repset_rejects_instances(self, hidden_of):
        """Test instance batches cannot give description representations."""
        encoded, run = hidden_of
        with pytest.raises(ContractError):
            description_repset(run(encoded.support), encoded.support, 0.1, Mode.EVAL)


class TestExport:
    """Test embedding CSV files."""

    def test_round_trip(self, tmp_path):
        """Test written rows read back equal."""
        rows = rows_from_matrix("eval", ["P1", "P2"], [0, 3], "full", np.array([[0.5, -1.0], [2.0, 0.25]]))
        path = tmp_path / "embeddings.csv"
        assert write_embeddings_csv(path, rows) == 2
        assert read_embeddings_csv(path) == rows
        header = path.read_text().splitlines()[0]
        assert header == "split,relation_id,instance_index,component,v0,v1"

    def test_mismatched_dims(self, tmp_path):
        """Test rows of different sizes are rejected."""
        rows = [
            EmbeddingRow("eval", "P1", 0, "cls", (1.0, 2.0)),
            EmbeddingRow("eval", "P1", 1, "cls", (1.0,)),
        ]
        with pytest.raises(ContractError):
            write_embeddings_csv(tmp_path / "x.csv", rows)

    def test_empty(self, tmp_path):
        """Test there must be something to export."""
        with pytest.raises(ContractError):
            write_embeddings_csv(tmp_path / "x.csv", [])
