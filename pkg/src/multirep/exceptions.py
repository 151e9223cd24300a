"""
MultiRep exceptions.

Custom exception hierarchy for the library. Every error carries the
process exit code the command line reports for it.
"""

from typing import Any, Optional


class MultiRepError(Exception):
    """Base exception for all MultiRep errors."""
    exit_code = 1


class ConfigurationError(MultiRepError):
    """Invalid or infeasible configuration."""
    pass


class DataError(MultiRepError):
    """Error related to input data."""
    pass


class ParseError(DataError):
    """Malformed dataset or description file."""
    pass


class ValidationError(DataError):
    """Data violates a structural invariant."""
    pass


class EncodingError(DataError):
    """A rendered sequence cannot be encoded within the length limit."""
    pass


class SamplingError(DataError):
    """An episode cannot be sampled from a split."""
    pass


class CheckpointError(DataError):
    """Checkpoint is unreadable or of an unsupported format version."""
    pass


class NumericalError(MultiRepError):
    """A computation produced non-finite values."""
    exit_code = 2


class DivergenceError(NumericalError):
    """Training loss became non-finite."""

    def __init__(self, step: int, breakdown: Optional[Any] = None):
        self.step = step
        self.breakdown = breakdown
        super().__init__(f"Non-finite loss at step {step}: {breakdown}")


class GradientCheckError(NumericalError):
    """Analytic and numeric gradients disagree."""

    def __init__(self, failures: list[str]):
        self.failures = list(failures)
        super().__init__("Gradient check failed for: " + ", ".join(self.failures))


class ShapeError(MultiRepError):
    """Operand shapes do not agree."""
    exit_code = 2


class DegenerateVectorError(MultiRepError):
    """A vector with (near) zero norm reached a normalisation."""
    exit_code = 2


class ContractError(MultiRepError):
    """A precondition of an operation was violated."""
    exit_code = 2
