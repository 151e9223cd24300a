"""
Autodiff layer interfaces.

This module defines the abstract differentiable operation and the
train/eval mode shared by every stochastic layer.
"""

from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Optional

import numpy as np

from multirep.autodiff.tensor import Tensor, current_record
from multirep.exceptions import NumericalError


class Mode(str, Enum):
    """Forward-pass mode."""
    TRAIN = "train"
    EVAL = "eval"


class Function(ABC):
    """
    Interface for differentiable operations.

    Subclasses implement ``forward`` on raw arrays, saving whatever the
    backward pass needs on ``self``, and ``backward``, which maps the
    gradient of the output to one gradient per input (None for inputs
    that receive none).

    Example:
        class Square(Function):
            tag = "square"

            def forward(self, x):
                self.x = x
                return x * x

            def backward(self, grad):
                return (2.0 * self.x * grad,)
    """

    tag: str = "function"

    @abstractmethod
    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        """
        Compute the output from input arrays.

        Args:
            *arrays: Data of the input tensors.

        Returns:
            The output array.
        """
        ...

    @abstractmethod
    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        """
        Propagate the output gradient to the inputs.

        Args:
            grad: Gradient of the loss with respect to the output.

        Returns:
            One gradient per input, shaped like that input.
        """
        ...

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        """
        Run the operation and register it in the active record.

        Keyword arguments are passed to the constructor.

        Raises:
            NumericalError: If the output contains NaN or Inf.
        """
        function = cls(**kwargs)
        out = np.asarray(function.forward(*(t.data for t in inputs)))
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"Non-finite output from '{cls.tag}'")

        record = current_record()
        if record is not None and any(
            t.requires_grad or t.record is record for t in inputs
        ):
            input_ids = tuple(record.input_id(t) for t in inputs)
            node_id = record.add(cls.tag, function, input_ids)
            return Tensor._wrap(out, record=record, node_id=node_id)
        return Tensor._wrap(out)
