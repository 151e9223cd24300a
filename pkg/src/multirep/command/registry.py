"""
Command registry.

Maps subcommand names to handlers, runs lifecycle hooks around them and
turns every failure into a CommandResult with the matching exit code.
"""

import logging
from dataclasses import replace
from threading import RLock
from typing import Any, Optional, Type

from multirep.harness.hooks import HookManager, HookType
from multirep.command.interface import (
    EXIT_ERROR,
    CommandContext,
    CommandResult,
    ICommandHandler,
)
from multirep.exceptions import MultiRepError


logger = logging.getLogger(__name__)


class CommandRegistry:
    """
    Central registry for command handlers.

    Example:
        registry = CommandRegistry()
        register_all_handlers(registry)
        result = registry.execute(CommandContext("train", config, {"out": "runs/a"}))
        sys.exit(result.exit_code)
    """

    def __init__(self):
        self._handlers: dict[str, ICommandHandler] = {}
        self._aliases: dict[str, str] = {}
        self._hooks = HookManager()
        self._lock = RLock()

    @property
    def hooks(self) -> HookManager:
        """Get the hook manager."""
        return self._hooks

    @staticmethod
    def _key(command: str) -> str:
        return command.strip().lower().replace("_", "-")

    def register(self, handler: ICommandHandler) -> None:
        """
        Register a command handler.

        Raises:
            ValueError: If a handler for the command or one of its
                aliases already exists.
        """
        with self._lock:
            name = self._key(handler.command_name)
            aliases = [self._key(a) for a in handler.aliases]
            for key in [name, *aliases]:
                if key in self._handlers or key in self._aliases:
                    raise ValueError(f"Handler for '{key}' already registered")
            self._handlers[name] = handler
            for alias in aliases:
                self._aliases[alias] = name

    def register_class(self, handler_class: Type[ICommandHandler]) -> None:
        """Register a handler by class (instantiates automatically)."""
        self.register(handler_class())

    def unregister(self, command: str) -> bool:
        """
        Unregister a command handler and its aliases.

        Returns:
            True if handler was removed, False if not found.
        """
        with self._lock:
            name = self._key(command)
            real_name = self._aliases.get(name, name)
            handler = self._handlers.pop(real_name, None)
            if handler is None:
                return False
            for alias in handler.aliases:
                self._aliases.pop(self._key(alias), None)
            return True

    def get(self, command: str) -> Optional[ICommandHandler]:
        """Handler for a command name or alias, if any."""
        with self._lock:
            name = self._key(command)
            return self._handlers.get(self._aliases.get(name, name))

    def has(self, command: str) -> bool:
        """Check if a command has a registered handler."""
        return self.get(command) is not None

    def execute(self, context: CommandContext) -> CommandResult:
        """
        Execute a command using its registered handler.

        Progress events from the handler go to ``context.on_progress``
        and then to the ON_PROGRESS hooks.

        Returns:
            The handler's result, or an error result whose exit code
            comes from the raised MultiRepError (1 for anything else).
        """
        handler = self.get(context.command)
        if handler is None:
            return CommandResult.error(f"No handler registered for command: {context.command}")

        problem = handler.validate_args(**context.options)
        if problem:
            return CommandResult.error(f"Invalid arguments for {handler.command_name}: {problem}")

        context = replace(context, on_progress=self._progress(context))
        self._hooks.run(HookType.PRE_EXECUTE, context)
        try:
            result = handler.execute(context)
        except MultiRepError as e:
            self._hooks.run(HookType.ON_ERROR, context, e)
            logger.error("%s failed: %s", handler.command_name, e)
            return CommandResult.error(str(e), e.exit_code)
        except KeyboardInterrupt as e:
            self._hooks.run(HookType.ON_ERROR, context, e)
            return CommandResult.cancelled()
        except Exception as e:
            self._hooks.run(HookType.ON_ERROR, context, e)
            logger.exception("%s failed", handler.command_name)
            return CommandResult.error(f"{type(e).__name__}: {e}", EXIT_ERROR)

        self._hooks.run(HookType.POST_EXECUTE, context, result)
        return result

    def _progress(self, context: CommandContext):
        callback = context.on_progress

        def emit(event: Any) -> None:
            if callback is not None:
                callback(event)
            self._hooks.run(HookType.ON_PROGRESS, context, event)
        return emit

    def list_commands(self) -> list[str]:
        """Get list of all registered command names."""
        with self._lock:
            return list(self._handlers.keys())

    def list_all(self) -> list[str]:
        """Get list of all commands including aliases."""
        with self._lock:
            return list(self._handlers.keys()) + list(self._aliases.keys())

    def clear(self) -> None:
        """Remove all registered handlers."""
        with self._lock:
            self._handlers.clear()
            self._aliases.clear()
