"""
Observers for runs and commands.

A HookManager holds hooks per hook point and calls them in priority
order. The trainer publishes its TrainingEvents on ON_PROGRESS; the
command registry adds the lifecycle points around each handler.
"""

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from threading import RLock
from typing import Any, Callable, Optional, Union

from multirep.harness.metrics import JsonLinesWriter


logger = logging.getLogger(__name__)


class HookType(str, Enum):
    """Points a hook can observe."""
    PRE_EXECUTE = "pre_execute"
    POST_EXECUTE = "post_execute"
    ON_ERROR = "on_error"        # payload is the exception
    ON_PROGRESS = "on_progress"  # payload is a TrainingEvent


HookFunction = Callable[[Any, Any], None]


class IHook(ABC):
    """
    A callable observer of one hook point.

    Subclasses set ``hook_type`` and may lower ``priority`` to run
    earlier.
    """
    hook_type: HookType = HookType.ON_PROGRESS
    priority: int = 100

    @property
    def name(self) -> str:
        return type(self).__name__

    @abstractmethod
    def __call__(self, context: Any, payload: Any = None) -> None:
        """
        Args:
            context: The trainer or CommandContext publishing the event.
            payload: Event, result or exception, by hook point.
        """


class FunctionHook(IHook):
    """Plain function ``func(context, payload)`` as a hook."""

    def __init__(self, hook_type: HookType, func: HookFunction, priority: int = 100):
        self.hook_type = hook_type
        self.func = func
        self.priority = priority

    @property
    def name(self) -> str:
        return getattr(self.func, "__qualname__", repr(self.func))

    def __call__(self, context: Any, payload: Any = None) -> None:
        self.func(context, payload)


class JsonLinesHook(IHook):
    """Writes every progress event as one JSON line."""
    hook_type = HookType.ON_PROGRESS

    def __init__(self, writer: JsonLinesWriter):
        self.writer = writer

    def __call__(self, context: Any, payload: Any = None) -> None:
        self.writer.write(payload.to_dict())


@dataclass(order=True)
class _Entry:
    priority: int
    order: int
    hook: IHook = field(compare=False)


class HookManager:
    """
    Registered hooks by hook point.

    Equal priorities run in registration order. A hook that raises is
    logged and skipped.

    Example:
        hooks = HookManager()

        @hooks.on(HookType.ON_PROGRESS)
        def show(context, event):
            print(event.to_dict())
    """

    def __init__(self):
        self._entries: dict[HookType, list[_Entry]] = {t: [] for t in HookType}
        self._order = itertools.count()
        self._lock = RLock()

    def add(self, hook: IHook) -> IHook:
        with self._lock:
            entries = self._entries[hook.hook_type]
            entries.append(_Entry(hook.priority, next(self._order), hook))
            entries.sort()
        return hook

    def add_function(self, hook_type: HookType, func: HookFunction, priority: int = 100) -> IHook:
        return self.add(FunctionHook(hook_type, func, priority))

    def on(self, hook_type: HookType, priority: int = 100) -> Callable[[HookFunction], HookFunction]:
        """Decorator form of add_function."""
        def decorator(func: HookFunction) -> HookFunction:
            self.add_function(hook_type, func, priority)
            return func
        return decorator

    def remove(self, hook: Union[IHook, HookFunction]) -> bool:
        """
        Remove a hook, or the function hook wrapping ``hook``.

        Returns:
            Whether anything was removed.
        """
        with self._lock:
            for entries in self._entries.values():
                for i, entry in enumerate(entries):
                    if entry.hook is hook or getattr(entry.hook, "func", None) is hook:
                        del entries[i]
                        return True
        return False

    def hooks(self, hook_type: HookType) -> list[IHook]:
        with self._lock:
            return [entry.hook for entry in self._entries[hook_type]]

    def run(self, hook_type: HookType, context: Any, payload: Any = None) -> None:
        for hook in self.hooks(hook_type):
            try:
                hook(context, payload)
            except Exception:
                logger.warning("%s hook %s failed", hook_type.value, hook.name, exc_info=True)

    def clear(self, hook_type: Optional[HookType] = None) -> None:
        with self._lock:
            for t in ([hook_type] if hook_type else HookType):
                self._entries[t].clear()

    def count(self, hook_type: Optional[HookType] = None) -> int:
        with self._lock:
            if hook_type:
                return len(self._entries[hook_type])
            return sum(len(entries) for entries in self._entries.values())
