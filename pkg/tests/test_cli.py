"""
Tests for the command layer and the command line.

Tests cover:
- Handler registration, aliases and lookup
- Exit codes for errors and interrupts
- Lifecycle and progress hooks
- Config and option building from flags
- End-to-end runs through main()
"""

import json
from pathlib import Path

import pytest

from multirep.command import (
    EXIT_ERROR,
    EXIT_NUMERICAL,
    EXIT_OK,
    CommandContext,
    CommandRegistry,
    CommandResult,
    CommandStatus,
    HookType,
    IHook,
    default_registry,
)
from multirep.command.handlers import BaseCommandHandler
from multirep.console import build_config, build_parser, command_options, main
from multirep.exceptions import NumericalError, ParseError
from multirep.harness import RunConfig, read_csv


class StubHandler(BaseCommandHandler):
    """Handler running a given function."""

    def __init__(self, name="stub", run=None, aliases=()):
        self._name = name
        self._run = run or (lambda context: CommandResult.success({"ok": True}))
        self._aliases = list(aliases)

    @property
    def command_name(self):
        return self._name

    @property
    def aliases(self):
        return self._aliases

    @property
    def help(self):
        return "Stub"

    def validate_args(self, **options):
        return "need --go" if options.get("go") is False else None

    def execute(self, context):
        return self._run(context)


def raiser(error):
    def run(context):
        raise error
    return run


class RecordingHook(IHook):
    """Hook appending its label and payload to a shared log."""

    def __init__(self, label, log, hook_type=HookType.PRE_EXECUTE, priority=100):
        self.label, self.log = label, log
        self.hook_type, self.priority = hook_type, priority

    def __call__(self, context, payload=None):
        self.log.append((self.label, payload))


@pytest.fixture
def registry():
    return CommandRegistry()


def run(registry, command="stub", **options):
    return registry.execute(CommandContext(command, RunConfig(), options))


class TestRegistry:
    """Test handler registration and lookup."""

    def test_default_commands(self):
        """Test every subcommand is registered."""
        assert set(default_registry().list_commands()) == {
            "train", "eval", "ablate", "sweep-m", "export-embeddings",
            "export-predictions", "gradcheck", "gen-synthetic",
        }

    def test_alias_and_normalisation(self, registry):
        """Test aliases, case and underscores resolve to the handler."""
        handler = StubHandler("sweep-m", aliases=["sweep"])
        registry.register(handler)
        assert registry.get("SWEEP_M") is handler
        assert registry.get("sweep") is handler
        assert "sweep" in registry.list_all()

    def test_duplicate(self, registry):
        """Test a name or alias can only be registered once."""
        registry.register(StubHandler("a", aliases=["b"]))
        with pytest.raises(ValueError):
            registry.register(StubHandler("b"))

    def test_unregister(self, registry):
        """Test removing a handler removes its aliases."""
        registry.register(StubHandler("a", aliases=["b"]))
        assert registry.unregister("b")
        assert not registry.has("a") and not registry.has("b")
        assert not registry.unregister("a")

    def test_unknown_command(self, registry):
        """Test an unknown command is an error result."""
        result = run(registry, "nothing")
        assert result.is_error
        assert result.exit_code == EXIT_ERROR

    def test_invalid_arguments(self, registry):
        """Test validation problems stop the command."""
        registry.register(StubHandler())
        result = run(registry, go=False)
        assert result.is_error and "need --go" in result.error


class TestExitCodes:
    """Test failures become results with exit codes."""

    def test_success(self, registry):
        """Test a successful command exits 0."""
        registry.register(StubHandler())
        result = run(registry)
        assert result.is_success and result.exit_code == EXIT_OK
        assert result.data == {"ok": True}

    @pytest.mark.parametrize(
        "error, code",
        [
            (NumericalError("inf"), EXIT_NUMERICAL),
            (ParseError("bad.json is not JSON"), EXIT_ERROR),
            (RuntimeError("boom"), EXIT_ERROR),
        ],
    )
    def test_errors(self, registry, error, code):
        """Test numerical failures exit 2 and everything else exits 1."""
        registry.register(StubHandler(run=raiser(error)))
        result = run(registry)
        assert result.status is CommandStatus.ERROR
        assert result.exit_code == code

    def test_interrupt(self, registry):
        """Test an interrupted command is cancelled."""
        registry.register(StubHandler(run=raiser(KeyboardInterrupt())))
        result = run(registry)
        assert result.status is CommandStatus.CANCELLED
        assert result.exit_code == EXIT_ERROR


class TestHooks:
    """Test lifecycle and progress hooks."""

    def test_lifecycle_order(self, registry):
        """Test pre hooks run by priority, then post hooks with the result."""
        log = []
        registry.register(StubHandler())
        registry.hooks.add(RecordingHook("late", log, priority=200))
        registry.hooks.add(RecordingHook("early", log, priority=10))
        registry.hooks.add(RecordingHook("post", log, HookType.POST_EXECUTE))
        result = run(registry)
        assert [name for name, _ in log] == ["early", "late", "post"]
        assert log[-1][1] is result

    def test_error_hook(self, registry):
        """Test error hooks receive the exception and post hooks do not run."""
        log = []
        error = NumericalError("nan")
        registry.register(StubHandler(run=raiser(error)))
        registry.hooks.add(RecordingHook("error", log, HookType.ON_ERROR))
        registry.hooks.add(RecordingHook("post", log, HookType.POST_EXECUTE))
        run(registry)
        assert log == [("error", error)]

    def test_failing_hook_is_skipped(self, registry):
        """Test a raising hook does not fail the command."""
        registry.register(StubHandler())

        @registry.hooks.on(HookType.PRE_EXECUTE)
        def broken(context, _):
            raise RuntimeError("hook failure")

        assert run(registry).is_success

    def test_remove(self, registry):
        """Test hooks can be removed by instance."""
        log = []
        hook = RecordingHook("pre", log)
        registry.hooks.add(hook)
        assert registry.hooks.count(HookType.PRE_EXECUTE) == 1
        assert registry.hooks.remove(hook)
        assert registry.hooks.count() == 0

    def test_function_hooks_keep_registration_order(self, registry):
        """Test equal priorities run in order added and functions remove by identity."""
        log = []

        def first(context, payload):
            log.append("first")

        registry.hooks.add_function(HookType.PRE_EXECUTE, first)
        registry.hooks.add_function(HookType.PRE_EXECUTE, lambda context, payload: log.append("second"))
        registry.register(StubHandler())
        run(registry)
        assert log == ["first", "second"]
        assert registry.hooks.remove(first)
        assert not registry.hooks.remove(first)
        assert [hook.priority for hook in registry.hooks.hooks(HookType.PRE_EXECUTE)] == [100]

    def test_progress(self, registry):
        """Test handler events reach the context callback and the progress hooks."""
        def emit(context):
            context.on_progress("event")
            return CommandResult.success()

        registry.register(StubHandler(run=emit))
        seen, hooked = [], []
        registry.hooks.add_function(HookType.ON_PROGRESS, lambda context, event: hooked.append(event))
        registry.execute(CommandContext("stub", RunConfig(), on_progress=seen.append))
        assert seen == ["event"] and hooked == ["event"]


class TestConfigFlags:
    """Test turning flags into a RunConfig and options."""

    @pytest.fixture
    def parse(self):
        parser = build_parser(default_registry())
        return parser.parse_args

    def test_defaults(self, parse):
        """Test no flags give the default config."""
        assert build_config(parse(["train"])) == RunConfig()

    def test_flags(self, parse):
        """Test episode, loss and scalar flags."""
        config = build_config(parse([
            "train", "--k", "5", "--tau", "0.05", "--seeds", "3,4",
            "--iterations", "10", "--no-descriptions", "--set", "optimizer.lr=0.01",
        ]))
        assert (config.episodes.k, config.episodes.q) == (5, 5)
        assert config.loss.temperature == 0.05
        assert config.seeds == (3, 4)
        assert config.iterations == 10
        assert not config.episodes.with_descriptions
        assert config.optimizer.lr == 0.01

    def test_config_file(self, parse, tiny_config, tmp_path):
        """Test --config loads a saved run config."""
        path = tmp_path / "run.json"
        tiny_config.save(path)
        assert build_config(parse(["train", "--config", str(path)])) == tiny_config

    def test_options(self, parse):
        """Test non-config flags become options."""
        options = command_options(parse(["eval", "--checkpoint", "runs/a/best", "--grid", "--out", "x"]))
        assert options["checkpoint"] == "runs/a/best"
        assert options["grid"] and options["out"] == "x"
        assert options["explicit_data"] is False
        assert "tau" not in options
        assert command_options(parse(["eval", "--data", "a.json"]))["explicit_data"] is True


class TestMain:
    """Test end-to-end runs."""

    @pytest.fixture
    def config_file(self, tiny_config, tmp_path):
        path = tmp_path / "run.json"
        tiny_config.save(path)
        return str(path)

    def test_gen_synthetic(self, tmp_path, capsys):
        """Test the corpus files are written and readable back as data."""
        out = tmp_path / "corpus"
        assert main(["gen-synthetic", "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["train_relations"] == 18 and summary["eval_relations"] == 6
        for name in ("train.json", "eval.json", "descriptions.json"):
            assert (out / name).exists()

    def test_gradcheck(self, capsys):
        """Test the gradient check passes."""
        assert main(["gradcheck", "--trials", "1"]) == 0
        assert json.loads(capsys.readouterr().out)["passed"] is True

    def test_bad_override(self):
        """Test an unknown --set key exits 1."""
        assert main(["train", "--set", "loss.weight=2"]) == 1

    def test_data_without_eval(self, tmp_path):
        """Test --data needs --eval-data."""
        assert main(["train", "--data", str(tmp_path / "train.json")]) == 1

    def test_eval_needs_checkpoint(self, capsys):
        """Test eval without --checkpoint exits 1."""
        assert main(["eval"]) == 1
        assert "--checkpoint" in capsys.readouterr().err

    def test_missing_checkpoint(self, config_file, tmp_path):
        """Test an unreadable checkpoint exits 1."""
        assert main(["eval", "--config", config_file, "--checkpoint", str(tmp_path / "none")]) == 1

    def test_train_then_evaluate(self, config_file, tmp_path, capsys):
        """Test training writes checkpoints that eval and exports read back."""
        out = tmp_path / "run"
        assert main(["train", "--config", config_file, "--out", str(out)]) == 0
        trained = json.loads(capsys.readouterr().out)
        assert trained["best_step"] == 3
        assert (out / "best" / "params.bin").exists()
        assert json.loads((out / "metrics.json").read_text()) == trained

        best = str(out / "best")
        assert main(["eval", "--config", config_file, "--checkpoint", best, "--out", str(out)]) == 0
        evaluated = json.loads(capsys.readouterr().out)
        assert evaluated["spec"] == "3-1"
        assert 0.0 <= evaluated["accuracy"] <= 1.0
        assert evaluated["episodes"] == 4

        assert main([
            "export-predictions", "--config", config_file, "--checkpoint", best,
            "--episodes", "2", "--out", str(out),
        ]) == 0
        capsys.readouterr()
        assert len(read_csv(Path(out) / "predictions.csv")) == 6
