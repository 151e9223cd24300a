"""
Gradient check and synthetic corpus commands.
"""

import logging

from multirep.autodiff.gradcheck import DEFAULT_TOLERANCE
from multirep.command.handlers.base import BaseCommandHandler
from multirep.command.interface import CommandContext, CommandResult
from multirep.corpus import generate_synthetic, save_descriptions_json, save_fewrel_json
from multirep.harness import run_gradcheck


logger = logging.getLogger(__name__)

GRADCHECK_FILE = "gradcheck.json"
TRAIN_FILE = "train.json"
EVAL_FILE = "eval.json"
DESCRIPTIONS_FILE = "descriptions.json"


class GradcheckHandler(BaseCommandHandler):
    """
    Handler for ``gradcheck``.

    Fails with exit code 2 and the names of the failing tensors when any
    relative error reaches the tolerance.
    """

    @property
    def command_name(self) -> str:
        return "gradcheck"

    @property
    def help(self) -> str:
        return "Compare analytic gradients with finite differences"

    def execute(self, context: CommandContext) -> CommandResult:
        report = run_gradcheck(
            trials=context.option("trials", 10),
            seed=context.config.seed,
            tolerance=context.option("tolerance", DEFAULT_TOLERANCE),
        )
        if context.option("out") is not None:
            self.write_json(self.output_dir(context) / GRADCHECK_FILE, report.to_dict())
        report.raise_for_failures()
        return CommandResult.success({
            "passed": report.passed,
            "checked": len(report.results),
            "max_error": report.max_error,
        })


class GenSyntheticHandler(BaseCommandHandler):
    """
    Handler for ``gen-synthetic``: writes the synthetic corpus as
    FewRel-format ``train.json`` and ``eval.json`` plus
    ``descriptions.json``, readable with ``--data``/``--eval-data``.
    """

    @property
    def command_name(self) -> str:
        return "gen-synthetic"

    @property
    def help(self) -> str:
        return "Write the synthetic corpus in FewRel format"

    def execute(self, context: CommandContext) -> CommandResult:
        config = context.config
        out = self.output_dir(context)
        train, held_out, descriptions = generate_synthetic(config.synthetic, config.data.corpus_seed)
        save_fewrel_json(train, out / TRAIN_FILE)
        save_fewrel_json(held_out, out / EVAL_FILE)
        save_descriptions_json(descriptions, out / DESCRIPTIONS_FILE)
        logger.info("Wrote synthetic corpus to %s", out)
        return CommandResult.success({
            "output_dir": str(out),
            "train_relations": len(train),
            "eval_relations": len(held_out),
            "instances": train.num_instances + held_out.num_instances,
        })
