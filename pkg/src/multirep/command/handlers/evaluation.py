"""
Evaluation and export commands.
"""

import logging
from typing import Any, Optional

from multirep.autodiff import using_precision
from multirep.command.handlers.base import BaseCommandHandler
from multirep.command.interface import CommandContext, CommandResult
from multirep.harness import (
    GRID_CELLS,
    GRID_COLUMNS,
    evaluate,
    evaluate_grid,
    export_embeddings,
    export_predictions,
    write_csv,
)


logger = logging.getLogger(__name__)

EVAL_FILE = "eval.json"
GRID_FILE = "grid.csv"
EMBEDDINGS_FILE = "embeddings.csv"
PREDICTIONS_FILE = "predictions.csv"

SPLITS = ("train", "validation", "eval")


def _needs_checkpoint(options: dict[str, Any]) -> Optional[str]:
    if not options.get("checkpoint"):
        return "--checkpoint is required"
    return None


class EvalHandler(BaseCommandHandler):
    """
    Handler for ``eval``.

    Evaluates a checkpoint on the held-out relations, either for the
    configured episode shape or, with ``grid``, for every cell of the
    5/10-way 1/5-shot grid the split supports.
    """

    @property
    def command_name(self) -> str:
        return "eval"

    @property
    def aliases(self) -> list[str]:
        return ["evaluate"]

    @property
    def help(self) -> str:
        return "Evaluate a checkpoint on held-out relations"

    def validate_args(self, **options: Any) -> Optional[str]:
        return _needs_checkpoint(options)

    def execute(self, context: CommandContext) -> CommandResult:
        config = context.config
        checkpoint, trained = self.load_checkpoint(context)
        model = self.checkpoint_model(context, checkpoint, trained)
        data = self.checkpoint_data(context, trained, checkpoint.vocab)
        out = self.output_dir(context)

        with using_precision(trained.precision):
            if context.option("grid", False):
                results = evaluate_grid(
                    model, data.held_out, config.eval_episodes, config.seeds,
                    data.descriptions, workers=config.workers,
                )
                rows = [
                    (cell.label, cell.n, cell.k, results[cell.label].accuracy, results[cell.label].std)
                    for cell in GRID_CELLS if cell.label in results
                ]
                write_csv(out / GRID_FILE, GRID_COLUMNS, rows)
                summary = {label: metrics.to_dict() for label, metrics in results.items()}
                return CommandResult.success(summary)

            spec = config.episodes
            metrics = evaluate(
                model, data.held_out, spec, config.eval_episodes, config.seeds,
                data.descriptions, config.workers,
            )
        summary = {"spec": spec.label, **metrics.to_dict()}
        self.write_json(out / EVAL_FILE, summary)
        return CommandResult.success(summary)


class _ExportHandler(BaseCommandHandler):

    def validate_args(self, **options: Any) -> Optional[str]:
        split = options.get("split")
        if split is not None and split not in SPLITS:
            return f"--split must be one of {', '.join(SPLITS)}"
        return _needs_checkpoint(options)

    def split_for(self, context: CommandContext, data):
        split = context.option("split", "eval")
        return {"train": data.train, "validation": data.validation}.get(split, data.held_out)


class ExportEmbeddingsHandler(_ExportHandler):
    """
    Handler for ``export-embeddings``: support embeddings of sampled
    episodes as CSV, for projection with external tools.
    """

    @property
    def command_name(self) -> str:
        return "export-embeddings"

    @property
    def help(self) -> str:
        return "Write sampled support embeddings to CSV"

    def execute(self, context: CommandContext) -> CommandResult:
        checkpoint, trained = self.load_checkpoint(context)
        data = self.checkpoint_data(context, trained, checkpoint.vocab)
        path = self.output_dir(context) / EMBEDDINGS_FILE
        rows = export_embeddings(
            checkpoint,
            self.split_for(context, data),
            context.config.episodes,
            path,
            count=context.option("count", 120),
            seed=context.config.seed,
            component=context.option("component", "full"),
        )
        return CommandResult.success({"path": str(path), "rows": rows})


class ExportPredictionsHandler(_ExportHandler):
    """Handler for ``export-predictions``: one CSV row per query."""

    @property
    def command_name(self) -> str:
        return "export-predictions"

    @property
    def help(self) -> str:
        return "Write per-query predictions of a fixed episode stream to CSV"

    def execute(self, context: CommandContext) -> CommandResult:
        checkpoint, trained = self.load_checkpoint(context)
        data = self.checkpoint_data(context, trained, checkpoint.vocab)
        path = self.output_dir(context) / PREDICTIONS_FILE
        accuracy = export_predictions(
            checkpoint,
            self.split_for(context, data),
            context.config.episodes,
            path,
            episodes=context.option("episodes", 10),
            seed=context.config.seed,
            descriptions=data.descriptions,
        )
        return CommandResult.success({"path": str(path), "accuracy": accuracy})
