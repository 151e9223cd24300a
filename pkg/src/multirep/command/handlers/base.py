"""
Base command handler implementation.

Shared plumbing for the built-in handlers: output locations, corpus
loading and rebuilding models from checkpoints.
"""

import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Optional

from multirep.autodiff import using_precision
from multirep.command.interface import CommandContext, ICommandHandler
from multirep.encoder import Checkpoint
from multirep.exceptions import ConfigurationError
from multirep.harness import MultiRepModel, RunConfig, RunData, load_data
from multirep.objectives import ScoreMode
from multirep.textproc import Vocab


class BaseCommandHandler(ICommandHandler):
    """
    Base class for command handlers.

    Subclasses set ``command_name`` and ``help`` and implement
    ``execute``.
    """

    @property
    def aliases(self) -> list[str]:
        """Default: no aliases."""
        return []

    def validate_args(self, **options: Any) -> Optional[str]:
        """Default: always valid."""
        return None

    # --- Paths ---

    def output_dir(self, context: CommandContext) -> Path:
        """``--out`` if given, else the config's output directory."""
        return Path(context.option("out", context.config.output_dir))

    def write_json(self, path: Path, data: Any) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    # --- Data and models ---

    def load_data(self, context: CommandContext, vocab: Optional[Vocab] = None) -> RunData:
        return load_data(context.config, vocab)

    def load_checkpoint(self, context: CommandContext) -> tuple[Checkpoint, RunConfig]:
        """
        Raises:
            ConfigurationError: Without a ``checkpoint`` option.
            CheckpointError: If the directory cannot be read.
        """
        path = context.option("checkpoint")
        if path is None:
            raise ConfigurationError(f"{self.command_name} needs --checkpoint")
        checkpoint = Checkpoint.load(path)
        return checkpoint, RunConfig.from_dict(checkpoint.config)

    def checkpoint_data(self, context: CommandContext, trained: RunConfig, vocab: Vocab) -> RunData:
        """
        Corpus for a trained model, encoded with the model's vocabulary.

        Data settings given on the command line win; otherwise the
        corpus the checkpoint was trained on is reloaded.
        """
        source = context.config if context.option("explicit_data", False) else trained
        return load_data(source, vocab)

    def checkpoint_model(self, context: CommandContext, checkpoint: Checkpoint, trained: RunConfig) -> MultiRepModel:
        """
        Model of a checkpoint with the scoring flags applied.

        ``no_descriptions`` drops description scoring; ``score_mode``
        replaces the scoring rule.
        """
        loss = trained.loss
        if context.option("no_descriptions", False):
            loss = loss.without_descriptions()
        mode = context.option("score_mode")
        if mode is not None:
            loss = replace(loss, score_mode=ScoreMode(mode))
        with using_precision(trained.precision):
            return MultiRepModel.build(replace(trained, loss=loss), checkpoint.vocab, checkpoint.params)
