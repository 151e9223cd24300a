"""
Ablation and representation-count sweep commands.
"""

from typing import Any, Optional

from multirep.command.handlers.base import BaseCommandHandler
from multirep.command.interface import CommandContext, CommandResult
from multirep.harness import ABLATION_ARMS, ARMS, ablate, sweep_m


ABLATION_FILE = "ablation.csv"
SWEEP_FILE = "sweep_m.csv"

# The command line compares the single-change arms against the full model.
DEFAULT_ARMS: tuple[str, ...] = ("full", *ABLATION_ARMS)


class AblateHandler(BaseCommandHandler):
    """Handler for ``ablate``."""

    @property
    def command_name(self) -> str:
        return "ablate"

    @property
    def help(self) -> str:
        return "Train and evaluate each ablation arm over all seeds"

    def validate_args(self, **options: Any) -> Optional[str]:
        unknown = [arm for arm in options.get("arms") or () if arm not in ARMS]
        if unknown:
            return f"unknown arms {', '.join(unknown)}; valid: {', '.join(ARMS)}"
        return None

    def execute(self, context: CommandContext) -> CommandResult:
        out = self.output_dir(context)
        arms = context.option("arms", DEFAULT_ARMS)
        results = ablate(context.config, self.load_data(context), arms, out / ABLATION_FILE, out)
        return CommandResult.success({arm: metrics.to_dict() for arm, metrics in results.items()})


class SweepHandler(BaseCommandHandler):
    """Handler for ``sweep-m``."""

    @property
    def command_name(self) -> str:
        return "sweep-m"

    @property
    def aliases(self) -> list[str]:
        return ["sweep"]

    @property
    def help(self) -> str:
        return "Accuracy over every representation subset of each size M"

    def validate_args(self, **options: Any) -> Optional[str]:
        if any(m < 1 for m in options.get("sizes") or ()):
            return "--sizes must be positive"
        return None

    def execute(self, context: CommandContext) -> CommandResult:
        out = self.output_dir(context)
        results = sweep_m(
            context.config,
            self.load_data(context),
            sizes=context.option("sizes"),
            out_path=out / SWEEP_FILE,
        )
        return CommandResult.success({str(m): metrics.to_dict() for m, metrics in results.items()})
