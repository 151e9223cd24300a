# Command Handlers Package
"""
Built-in handlers for the ``multirep`` subcommands.
"""

from multirep.command.handlers.base import BaseCommandHandler
from multirep.command.handlers.evaluation import (
    EvalHandler,
    ExportEmbeddingsHandler,
    ExportPredictionsHandler,
)
from multirep.command.handlers.experiments import DEFAULT_ARMS, AblateHandler, SweepHandler
from multirep.command.handlers.tools import GenSyntheticHandler, GradcheckHandler
from multirep.command.handlers.training import TrainHandler

__all__ = [
    "BaseCommandHandler",
    # Training
    "TrainHandler",
    # Evaluation and export
    "EvalHandler",
    "ExportEmbeddingsHandler",
    "ExportPredictionsHandler",
    # Experiments
    "AblateHandler",
    "SweepHandler",
    "DEFAULT_ARMS",
    # Tools
    "GradcheckHandler",
    "GenSyntheticHandler",
    "register_all_handlers",
]


def register_all_handlers(registry) -> None:
    """
    Register all built-in handlers to a registry.

    Args:
        registry: CommandRegistry to register handlers to.
    """
    handlers = [
        TrainHandler(),
        EvalHandler(),
        AblateHandler(),
        SweepHandler(),
        ExportEmbeddingsHandler(),
        ExportPredictionsHandler(),
        GradcheckHandler(),
        GenSyntheticHandler(),
    ]

    for handler in handlers:
        registry.register(handler)
