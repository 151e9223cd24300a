"""
Command layer interfaces.

This module defines the abstract interface for command handlers and
the data structures passed into and out of them.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import TYPE_CHECKING, Any, Callable, Optional

if TYPE_CHECKING:
    from multirep.harness.config import RunConfig
    from multirep.harness.trainer import TrainingEvent


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NUMERICAL = 2


class CommandStatus(Enum):
    """Command execution status."""
    SUCCESS = auto()
    ERROR = auto()
    CANCELLED = auto()


@dataclass
class CommandContext:
    """
    Context passed to command handlers.

    Attributes:
        command: Command name as typed.
        config: Run config with command-line overrides applied.
        options: Command options (checkpoint path, output path, arms, ...).
        on_progress: Receives training and evaluation events.
        data: Scratch space shared with hooks.
    """
    command: str
    config: "RunConfig"
    options: dict[str, Any] = field(default_factory=dict)
    on_progress: Optional[Callable[["TrainingEvent"], None]] = None
    data: dict[str, Any] = field(default_factory=dict)

    def option(self, name: str, default: Any = None) -> Any:
        """An option, or ``default`` when missing or None."""
        value = self.options.get(name)
        return default if value is None else value


@dataclass
class CommandResult:
    """
    Result of command execution.

    ``exit_code`` is what the process returns: 0 on success, 1 for
    configuration and data errors, 2 for numerical failures.
    """
    status: CommandStatus
    data: Any = None
    error: Optional[str] = None
    exit_code: int = EXIT_OK

    @property
    def is_success(self) -> bool:
        """Check if command succeeded."""
        return self.status == CommandStatus.SUCCESS

    @property
    def is_error(self) -> bool:
        """Check if command failed."""
        return self.status == CommandStatus.ERROR

    @classmethod
    def success(cls, data: Any = None) -> "CommandResult":
        """Create a success result."""
        return cls(status=CommandStatus.SUCCESS, data=data)

    @classmethod
    def error(cls, message: str, exit_code: int = EXIT_ERROR) -> "CommandResult":
        """Create an error result."""
        return cls(status=CommandStatus.ERROR, error=message, exit_code=exit_code)

    @classmethod
    def cancelled(cls) -> "CommandResult":
        """Create a result for an interrupted command."""
        return cls(status=CommandStatus.CANCELLED, error="Command interrupted", exit_code=EXIT_ERROR)


class ICommandHandler(ABC):
    """
    Interface for command handlers.

    Each handler runs one subcommand against a CommandContext.
    """

    @property
    @abstractmethod
    def command_name(self) -> str:
        """The command this handler handles."""
        ...

    @property
    @abstractmethod
    def aliases(self) -> list[str]:
        """Alternative names for this command."""
        ...

    @property
    @abstractmethod
    def help(self) -> str:
        """One-line description shown by the command line."""
        ...

    @abstractmethod
    def execute(self, context: CommandContext) -> CommandResult:
        """
        Execute the command.

        Args:
            context: Execution context with the run config and options.

        Returns:
            CommandResult with a JSON-serialisable summary.

        Raises:
            MultiRepError: Converted to an error result by the registry.
        """
        ...

    @abstractmethod
    def validate_args(self, **options: Any) -> Optional[str]:
        """
        Validate command options.

        Args:
            **options: The context's options.

        Returns:
            None if valid, else a message naming the problem.
        """
        ...
