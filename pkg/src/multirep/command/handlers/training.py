"""
Training command.
"""

import logging

from multirep.command.handlers.base import BaseCommandHandler
from multirep.command.interface import CommandContext, CommandResult
from multirep.harness import train, train_and_evaluate


logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.json"


class TrainHandler(BaseCommandHandler):
    """
    Handler for ``train``.

    Trains ``config.seed`` into the output directory. With
    ``all_seeds`` every seed of ``config.seeds`` is trained into
    ``seed_<s>/`` and its best checkpoint evaluated on the held-out
    relations.
    """

    @property
    def command_name(self) -> str:
        return "train"

    @property
    def help(self) -> str:
        return "Train on sampled episodes, keeping the best and last checkpoints"

    def execute(self, context: CommandContext) -> CommandResult:
        config = context.config
        out = self.output_dir(context)
        data = self.load_data(context)

        if context.option("all_seeds", False):
            metrics = train_and_evaluate(config, data, output_dir=out)
            summary = {"output_dir": str(out), "spec": config.episodes.label, **metrics.to_dict()}
        else:
            result = train(config, data, str(out), context.on_progress)
            final = result.metrics.history[-1]
            summary = {
                "output_dir": str(out),
                "best_step": result.best_step,
                "validation": result.metrics.to_dict(),
                "final_loss": final.to_dict(config.iterations),
            }

        self.write_json(out / METRICS_FILE, summary)
        logger.info("Wrote %s", out / METRICS_FILE)
        return CommandResult.success(summary)
