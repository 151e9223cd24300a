"""
Floating-point precision selection.

Training runs in single precision, gradient checks in double. The
setting lives in a context variable, so a switch on one thread never
reaches threads that are already running. Worker pools that build
tensors pass the caller's precision on explicitly.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

import numpy as np

from multirep.exceptions import ConfigurationError


PRECISIONS: dict[str, type] = {
    "single": np.float32,
    "double": np.float64,
}

_precision: ContextVar[str] = ContextVar("multirep_precision", default="single")


def get_precision() -> str:
    """Name of the active precision ("single" or "double")."""
    return _precision.get()


def default_dtype() -> np.dtype:
    """numpy dtype used for new tensors."""
    return np.dtype(PRECISIONS[_precision.get()])


def _check(name: str) -> None:
    if name not in PRECISIONS:
        valid = ", ".join(PRECISIONS)
        raise ConfigurationError(f"Unknown precision '{name}'. Valid: {valid}")


def set_precision(name: str) -> None:
    """
    Select the precision for tensors this thread creates from now on.

    Raises:
        ConfigurationError: If the name is not a known precision.
    """
    _check(name)
    _precision.set(name)


@contextmanager
def using_precision(name: str) -> Iterator[None]:
    """
    Temporarily switch precision on the current thread.

    Example:
        with using_precision("double"):
            report = run_gradcheck()
    """
    _check(name)
    token = _precision.set(name)
    try:
        yield
    finally:
        _precision.reset(token)
