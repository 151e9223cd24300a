"""
Tests for the run harness.

Tests cover:
- RunConfig serialisation, overrides and validation
- Adam and loss descent on a fixed episode
- The model forward pass
- Reproducible training runs and their artefacts
- Evaluation, grid skipping, ablations and the M sweep
- Embedding and prediction exports
- The encoder and total-loss gradient checks
- Metrics files
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from multirep.autodiff import ComputationRecord, Mode, Tensor, backward, get_precision, ops, using_precision
from multirep.corpus import DatasetSplit, RelationInstance, SplitRole, check_disjoint, generate_synthetic
from multirep.encoder import EncoderConfig, EncoderParams, TransformerEncoder, init_params
from multirep.episodes import EpisodeSpec
from multirep.exceptions import ConfigurationError, DivergenceError, NumericalError, ValidationError
from multirep.harness import (
    ABLATION_ARMS,
    ABLATION_COLUMNS,
    PREDICTION_COLUMNS,
    SWEEP_COLUMNS,
    Adam,
    DataConfig,
    HookManager,
    HookType,
    JsonLinesWriter,
    MultiRepModel,
    OptimizerConfig,
    RunConfig,
    Trainer,
    ablate,
    arm_config,
    carve_validation,
    check_encoder,
    check_total_loss,
    evaluate,
    evaluate_grid,
    export_embeddings,
    export_predictions,
    flatten_config,
    load_data,
    mean_std,
    read_csv,
    read_json_lines,
    sweep_m,
    train,
    write_csv,
)
from multirep.objectives import LossConfig
from multirep.representation import RepSelector, read_embeddings_csv
from multirep.textproc import build_vocab


class TestRunConfig:
    """Test run configuration."""

    def test_json_round_trip(self, tiny_config):
        """Test to_json/from_json gives an equal config."""
        assert RunConfig.from_json(tiny_config.to_json()) == tiny_config
        assert RunConfig.from_json(RunConfig().to_json()) == RunConfig()

    def test_file_round_trip(self, tiny_config, tmp_path):
        """Test save/load."""
        path = tmp_path / "run.json"
        tiny_config.save(path)
        assert RunConfig.load(path) == tiny_config

    def test_missing_file(self, tmp_path):
        """Test loading a missing config."""
        with pytest.raises(ConfigurationError):
            RunConfig.load(tmp_path / "missing.json")

    def test_default_corpus_has_room_for_five_way(self):
        """Test the default corpus leaves five-way room in every split."""
        data = load_data(RunConfig())
        assert (len(data.train), len(data.validation), len(data.held_out)) == (13, 5, 6)

    def test_overrides(self, tiny_config):
        """Test dotted overrides with JSON values."""
        config = tiny_config.override(["loss.temperature=0.05", "episodes.k=2", "iterations=7"])
        assert config.loss.temperature == 0.05
        assert config.episodes.k == 2
        assert config.iterations == 7

    @pytest.mark.parametrize("assignment", ["iterations", "bogus.x=1", "loss.weight=2", "nothing=1"])
    def test_bad_overrides(self, tiny_config, assignment):
        """Test malformed and unknown overrides."""
        with pytest.raises(ConfigurationError):
            tiny_config.override([assignment])

    def test_max_len_within_positions(self):
        """Test encoded sequences must fit the position table."""
        with pytest.raises(ConfigurationError):
            RunConfig(encoder=EncoderConfig(max_positions=32), data=DataConfig(max_len=64))

    def test_paths_together(self):
        """Test train and eval paths come as a pair."""
        with pytest.raises(ConfigurationError):
            DataConfig(train_path="train.json")
        assert DataConfig().synthetic

    def test_descriptions_follow_loss(self):
        """Test episodes carry descriptions exactly when the loss uses them."""
        config = RunConfig().without_descriptions()
        assert not config.loss.use_descriptions and not config.loss.use_rdcl
        assert not config.episodes.with_descriptions

    def test_with_episodes(self):
        """Test K sets Q by default and N alone keeps K and Q."""
        config = RunConfig().with_episodes(k=5)
        assert (config.episodes.n, config.episodes.k, config.episodes.q) == (5, 5, 5)
        wider = config.with_episodes(n=10)
        assert (wider.episodes.n, wider.episodes.k, wider.episodes.q) == (10, 5, 5)
        assert RunConfig().with_episodes(k=5, q=2).episodes.q == 2

    def test_flatten(self):
        """Test dotted flattening."""
        flat = flatten_config(RunConfig().to_dict())
        assert flat["loss.temperature"] == 0.1
        assert flat["encoder.hidden"] == 64


class TestData:
    """Test run splits."""

    def test_three_disjoint_splits(self, tiny_data):
        """Test train, validation and held-out relations never overlap."""
        check_disjoint(tiny_data.train, tiny_data.validation, tiny_data.held_out)
        assert (len(tiny_data.train), len(tiny_data.validation), len(tiny_data.held_out)) == (3, 3, 4)
        assert tiny_data.validation.role is SplitRole.VALIDATION
        assert tiny_data.held_out.role is SplitRole.TEST
        with pytest.raises(ValidationError):
            check_disjoint(tiny_data.train, tiny_data.validation, tiny_data.validation.with_role(SplitRole.TEST))

    def test_validation_comes_from_training_relations(self, tiny_config):
        """Test the carved relations are training relations and the choice is seeded."""
        generated, held_out, _ = generate_synthetic(tiny_config.synthetic, tiny_config.data.corpus_seed)
        data = load_data(tiny_config)
        assert set(data.train.relation_ids) | set(data.validation.relation_ids) == set(generated.relation_ids)
        assert set(data.held_out.relation_ids) == set(held_out.relation_ids)
        assert load_data(tiny_config).validation == data.validation

    def test_carve_leaves_training_relations(self, split_factory):
        """Test carving keeps at least two training relations."""
        train, validation = carve_validation(split_factory(5, 2), 3, seed=0)
        assert len(train) == 2 and len(validation) == 3
        with pytest.raises(ConfigurationError):
            carve_validation(split_factory(5, 2), 4, seed=0)


class TestOptimisation:
    """Test Adam and descent on a fixed episode."""

    def test_first_adam_step(self):
        """Test the bias-corrected first step moves each weight by lr against its gradient."""
        w = Tensor([1.0, -2.0], requires_grad=True, name="w")
        params = EncoderParams({"w": w})
        with ComputationRecord():
            grads = backward(ops.sum(ops.mul(w, Tensor([3.0, -0.5]))))
        optimizer = Adam(OptimizerConfig(lr=1e-3))
        updated = optimizer.step(params, grads)
        np.testing.assert_allclose(updated["w"].data, [1.0 - 1e-3, -2.0 + 1e-3], atol=1e-6)
        assert optimizer.steps == 1
        np.testing.assert_array_equal(params["w"].data, [1.0, -2.0])

    def test_loss_decreases(self, toy, config_factory, double_precision):
        """Test two Adam steps lower the loss of the fixed episode."""
        episode, vocab = toy
        config = config_factory(
            encoder=EncoderConfig(layers=1, hidden=16, heads=2, ff=32, dropout=0.0, max_positions=32),
            selector=RepSelector.full(description_dropout=0.0),
        )
        model = MultiRepModel.build(config, vocab)
        optimizer = Adam(OptimizerConfig(lr=1e-3))

        def loss_and_grads():
            with ComputationRecord():
                breakdown = model.forward(episode, Mode.EVAL).breakdown
                return breakdown.total, backward(breakdown.graph)

        before, grads = loss_and_grads()
        for _ in range(2):
            model.set_params(optimizer.step(model.params, grads))
            after, grads = loss_and_grads()
        assert after < before


class TestModel:
    """Test the episode forward pass."""

    def test_shapes_and_single_pass(self, toy, tiny_config):
        """Test embedding and score shapes, with one encoder call per episode."""
        episode, vocab = toy
        model = MultiRepModel.build(tiny_config, vocab)
        result = model.forward(episode, Mode.EVAL)
        assert model.encoder.calls == 1
        assert result.support.shape == (2, 80)
        assert result.query.shape == (2, 80)
        assert result.descriptions.shape == (2, 80)
        assert result.scores.shape == (2, 2)
        assert result.breakdown.is_finite()
        assert result.breakdown.l_rdcl > 0
        assert 0.0 <= result.accuracy <= 1.0

    def test_without_descriptions(self, toy, tiny_config):
        """Test the description-free path."""
        episode, vocab = toy
        model = MultiRepModel.build(tiny_config.without_descriptions(), vocab)
        result = model.forward(episode, Mode.EVAL)
        assert result.descriptions is None
        assert result.breakdown.l_rdcl == 0.0

    def test_without_rcl(self, toy, tiny_config):
        """Test a disabled representation loss contributes 0."""
        episode, vocab = toy
        config = replace(tiny_config, loss=replace(tiny_config.loss, use_rcl=False))
        breakdown = MultiRepModel.build(config, vocab).forward(episode, Mode.EVAL).breakdown
        assert breakdown.l_rcl == 0.0
        assert breakdown.total == pytest.approx(breakdown.l_ce + breakdown.l_rdcl)

    def test_vocab_mismatch(self, toy):
        """Test the encoder and vocabulary sizes must agree."""
        _, vocab = toy
        config = EncoderConfig(vocab_size=5, layers=1, hidden=8, heads=2, ff=8, max_positions=32)
        encoder = TransformerEncoder(config, init_params(config, 0))
        with pytest.raises(ConfigurationError):
            MultiRepModel(encoder, vocab, RepSelector.full(), LossConfig(), 32)

    def test_embed_instances(self, toy, tiny_config):
        """Test standalone embeddings match the episode pass."""
        episode, vocab = toy
        model = MultiRepModel.build(tiny_config, vocab)
        embeddings, reps = model.embed_instances(episode.support)
        assert embeddings.shape == (2, 80)
        assert reps["cls"].shape == (2, 16)
        np.testing.assert_allclose(
            embeddings.data, model.forward(episode, Mode.EVAL).support.data, atol=1e-5
        )


class TestTraining:
    """Test training runs."""

    def test_reproducible(self, tiny_config, tiny_data):
        """Test two runs of one config end with equal weights."""
        first = train(tiny_config, tiny_data)
        second = train(tiny_config, tiny_data)
        assert first.last.params.equals(second.last.params)
        assert first.metrics.accuracy == second.metrics.accuracy
        fresh = init_params(tiny_config.encoder.with_vocab_size(len(tiny_data.vocab)), tiny_config.seed)
        assert not first.last.params.equals(fresh)

    def test_events(self, tiny_config, tiny_data):
        """Test a step event per step and one validation at the end."""
        events = []
        result = train(tiny_config, tiny_data, on_progress=events.append)
        assert [e.kind for e in events] == ["step", "step", "step", "eval"]
        assert [e.step for e in events] == [1, 2, 3, 3]
        assert set(events[0].values) == {"l_ce", "l_rcl", "l_rdcl", "total"}
        assert result.best_step == 3
        assert len(result.metrics.history) == 3

    def test_artefacts(self, trained_run):
        """Test the files a run leaves behind."""
        out = trained_run.output_dir
        assert RunConfig.load(out / "config.json") == trained_run.config
        log = read_json_lines(out / "train.jsonl")
        assert [r["event"] for r in log] == ["step", "step", "step", "eval"]
        assert len(read_json_lines(out / "episodes.jsonl")) == 3
        for name in ("best", "last"):
            assert {p.name for p in (out / name).iterdir()} == {"params.bin", "config.json", "vocab.txt"}

    def test_checkpoint_bytes_reproducible(self, trained_run, tmp_path):
        """Test a rerun writes a byte-identical best checkpoint."""
        train(trained_run.config, trained_run.data, str(tmp_path))
        original = (trained_run.output_dir / "best" / "params.bin").read_bytes()
        assert (tmp_path / "best" / "params.bin").read_bytes() == original

    def test_divergence(self, tiny_config, tiny_data, monkeypatch):
        """Test numerical failures surface as a divergence at the failing step."""
        trainer = Trainer(tiny_config, tiny_data)

        def explode(*args, **kwargs):
            raise NumericalError("Non-finite output from 'exp'")

        monkeypatch.setattr(trainer.model, "forward", explode)
        with pytest.raises(DivergenceError) as excinfo:
            trainer.step(1)
        assert excinfo.value.step == 1
        assert excinfo.value.exit_code == 2

    def test_validates_on_validation_split(self, tiny_config, tiny_data, monkeypatch):
        """Test checkpoint selection never scores the held-out relations."""
        import multirep.harness.trainer as trainer_module

        scored = []
        original = trainer_module.evaluate

        def recording(model, split, *args, **kwargs):
            scored.append(split)
            return original(model, split, *args, **kwargs)

        monkeypatch.setattr(trainer_module, "evaluate", recording)
        train(tiny_config, tiny_data)
        assert scored and all(split is tiny_data.validation for split in scored)

    def test_events_reach_hooks(self, tiny_config, tiny_data):
        """Test trainer hooks get the trainer and every event."""
        trainer = Trainer(tiny_config, tiny_data)
        seen = []
        trainer.hooks.add_function(HookType.ON_PROGRESS, lambda context, event: seen.append((context, event.kind)))
        trainer.train()
        assert [kind for _, kind in seen] == ["step", "step", "step", "eval"]
        assert all(context is trainer for context, _ in seen)

    def test_loss_log_is_a_hook(self, tiny_config, tiny_data, tmp_path):
        """Test the loss log joins the shared hooks for the run only."""
        hooks = HookManager()
        written = []

        @hooks.on(HookType.ON_PROGRESS, priority=200)
        def after_log(context, event):
            written.append(len(read_json_lines(tmp_path / "train.jsonl")))

        train(tiny_config, tiny_data, str(tmp_path), hooks=hooks)
        assert written == [1, 2, 3, 4]
        assert hooks.count(HookType.ON_PROGRESS) == 1

    def test_infeasible_validation(self, config_factory, tiny_data):
        """Test validation needs N validation relations."""
        with pytest.raises(ConfigurationError):
            Trainer(config_factory(episodes=EpisodeSpec(n=5, k=1)), tiny_data)


class TestEvaluation:
    """Test evaluation."""

    @pytest.fixture
    def model(self, trained_run):
        return MultiRepModel.build(trained_run.config, trained_run.data.vocab, trained_run.result.best.params)

    def test_deterministic_and_thread_independent(self, model, trained_run):
        """Test repeated and threaded evaluation agree."""
        data = trained_run.data
        spec = EpisodeSpec(n=3, k=1)
        first = evaluate(model, data.held_out, spec, 6, seeds=(0, 1), descriptions=data.descriptions)
        again = evaluate(model, data.held_out, spec, 6, seeds=(0, 1), descriptions=data.descriptions)
        threaded = evaluate(model, data.held_out, spec, 6, seeds=(0, 1), descriptions=data.descriptions, workers=2)
        assert first.per_seed == again.per_seed == threaded.per_seed
        assert first.accuracy == pytest.approx(np.mean(list(first.per_seed.values())))

    def test_workers_follow_caller_precision(self, model, trained_run, monkeypatch):
        """Test evaluation threads run in the precision of the calling thread."""
        import multirep.harness.evaluation as evaluation_module

        seen = set()

        def recording(model, sampler, index):
            seen.add(get_precision())
            return 0, 1

        monkeypatch.setattr(evaluation_module, "_episode_correct", recording)
        with using_precision("double"):
            evaluation_module.evaluate_seed(model, trained_run.data.held_out, EpisodeSpec(n=3, k=1), 4, 0, workers=2)
        assert seen == {"double"}

    def test_indistinguishable_sentences(self, config_factory):
        """Test identical sentences give exactly chance accuracy."""
        relations = {
            f"R{r}": tuple(RelationInstance(("x", "y", "z", "w"), (0, 0), (3, 3), f"R{r}") for _ in range(3))
            for r in range(4)
        }
        split = DatasetSplit(relations, SplitRole.VALIDATION)
        config = config_factory().without_descriptions()
        model = MultiRepModel.build(config, build_vocab([split]))
        metrics = evaluate(model, split, EpisodeSpec(n=4, k=1, q=2, with_descriptions=False), 5, seeds=(0,))
        assert metrics.accuracy == 0.25

    def test_no_episodes(self, model, trained_run):
        """Test at least one episode is needed."""
        with pytest.raises(ConfigurationError):
            evaluate(model, trained_run.data.held_out, EpisodeSpec(n=3), 0, seeds=(0,))

    def test_grid_skips_infeasible_cells(self, model, trained_run):
        """Test cells the held-out split cannot fill are left out."""
        data = trained_run.data
        cells = (EpisodeSpec(n=3, k=1), EpisodeSpec(n=3, k=5), EpisodeSpec(n=10, k=1))
        results = evaluate_grid(model, data.held_out, 2, (0,), data.descriptions, cells)
        assert set(results) == {"3-1"}


class TestExperiments:
    """Test ablations and the M sweep."""

    def test_arm_configs(self, tiny_config):
        """Test each arm changes only its own setting."""
        assert arm_config(tiny_config, "w/o entity_pair").selector.m == 3
        assert not arm_config(tiny_config, "w/o L_RCL").loss.use_rcl
        assert arm_config(tiny_config, "w/o L_RCL").loss.use_rdcl
        assert arm_config(tiny_config, "full") == tiny_config
        with pytest.raises(ConfigurationError):
            arm_config(tiny_config, "w/o everything")

    def test_ablate(self, tiny_config, tiny_data, tmp_path):
        """Test every arm gets a row."""
        path = tmp_path / "ablation.csv"
        results = ablate(tiny_config, tiny_data, out_path=path)
        assert list(results) == list(ABLATION_ARMS)
        rows = read_csv(path)
        assert len(rows) == 7
        assert tuple(rows[0]) == ABLATION_COLUMNS
        assert rows[0]["n_way"] == "3" and rows[0]["k_shot"] == "1"

    def test_ablate_rejects_unknown_arm_first(self, tiny_config, tiny_data):
        """Test unknown arms fail before training."""
        with pytest.raises(ConfigurationError):
            ablate(tiny_config, tiny_data, arms=["full", "bogus"])

    def test_sweep(self, tiny_config, tiny_data, tmp_path):
        """Test one row per subset and seed."""
        path = tmp_path / "sweep.csv"
        results = sweep_m(tiny_config, tiny_data, sizes=(1, 5), out_path=path)
        assert set(results) == {1, 5}
        rows = read_csv(path)
        assert len(rows) == 6
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert {r["m"] for r in rows} == {"1", "5"}


class TestExports:
    """Test embedding and prediction exports."""

    def test_embeddings(self, trained_run, tmp_path):
        """Test full embeddings have 5d columns and exports repeat exactly."""
        data, config = trained_run.data, trained_run.config
        checkpoint = trained_run.result.best
        path = tmp_path / "embeddings.csv"
        assert export_embeddings(checkpoint, data.held_out, config.episodes, path, count=10) == 10
        rows = read_embeddings_csv(path)
        assert len(rows) == 10 and len(rows[0].vector) == 80
        assert all(r.split == "validation" for r in rows)

        again = tmp_path / "again.csv"
        export_embeddings(checkpoint, data.held_out, config.episodes, again, count=10)
        assert again.read_bytes() == path.read_bytes()

    def test_single_component(self, trained_run, tmp_path):
        """Test one component exports d columns."""
        data, config = trained_run.data, trained_run.config
        path = tmp_path / "cls.csv"
        export_embeddings(trained_run.result.best, data.held_out, config.episodes, path, count=4, component="cls")
        assert len(read_embeddings_csv(path)[0].vector) == 16

    def test_bad_component(self, trained_run, tmp_path):
        """Test unknown components and counts are rejected."""
        data, config = trained_run.data, trained_run.config
        with pytest.raises(ConfigurationError):
            export_embeddings(trained_run.result.best, data.held_out, config.episodes, tmp_path / "x.csv", component="pooler")
        with pytest.raises(ConfigurationError):
            export_embeddings(trained_run.result.best, data.held_out, config.episodes, tmp_path / "x.csv", count=0)

    def test_predictions(self, trained_run, tmp_path):
        """Test one row per query."""
        data, config = trained_run.data, trained_run.config
        path = tmp_path / "predictions.csv"
        accuracy = export_predictions(
            trained_run.result.best, data.held_out, config.episodes, path,
            episodes=2, descriptions=data.descriptions,
        )
        rows = read_csv(path)
        assert len(rows) == 6
        assert tuple(rows[0]) == PREDICTION_COLUMNS
        assert accuracy == pytest.approx(sum(int(r["correct"]) for r in rows) / 6)


class TestGradientChecks:
    """Test the encoder and loss gradient checks."""

    def test_encoder(self):
        """Test every encoder parameter in train mode."""
        report = check_encoder()
        assert report.passed, [str(r) for r in report.failures]

    def test_total_loss(self):
        """Test the total loss with respect to encoder parameters."""
        report = check_total_loss()
        assert report.passed, [str(r) for r in report.failures]


class TestMetricsFiles:
    """Test metric helpers and result files."""

    def test_mean_std(self):
        """Test population statistics."""
        mean, std = mean_std([0.5, 0.7])
        assert mean == pytest.approx(0.6)
        assert std == pytest.approx(0.1)
        assert mean_std([]) == (0.0, 0.0)

    def test_json_lines_nan(self, tmp_path):
        """Test non-finite floats are written as strings."""
        path = tmp_path / "log.jsonl"
        with JsonLinesWriter(path) as log:
            log.write({"step": 1, "total": math.nan})
            log.write({"step": 2, "total": 1.5})
        assert read_json_lines(path) == [{"step": 1, "total": "nan"}, {"step": 2, "total": 1.5}]

    def test_csv(self, tmp_path):
        """Test the CSV writer and reader."""
        path = tmp_path / "table.csv"
        assert write_csv(path, ("a", "b"), [(1, 0.5), (2, 0.25)]) == 2
        assert read_csv(path) == [{"a": "1", "b": "0.5"}, {"a": "2", "b": "0.25"}]
