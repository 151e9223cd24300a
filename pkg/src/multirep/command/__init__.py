# MultiRep Command Layer
"""
Command layer: registry, handlers and hook system behind the
``multirep`` command line.
"""

from multirep.command.handlers import register_all_handlers
from multirep.harness.hooks import HookManager, HookType, IHook
from multirep.command.interface import (
    EXIT_ERROR,
    EXIT_NUMERICAL,
    EXIT_OK,
    CommandContext,
    CommandResult,
    CommandStatus,
    ICommandHandler,
)
from multirep.command.registry import CommandRegistry


def default_registry() -> CommandRegistry:
    """A registry with every built-in handler."""
    registry = CommandRegistry()
    register_all_handlers(registry)
    return registry


__all__ = [
    "ICommandHandler",
    "CommandContext",
    "CommandResult",
    "CommandStatus",
    "CommandRegistry",
    "default_registry",
    "register_all_handlers",
    "HookManager",
    "IHook",
    "HookType",
    "EXIT_OK",
    "EXIT_ERROR",
    "EXIT_NUMERICAL",
]
