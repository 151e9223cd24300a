"""
Autodiff layer for MultiRep.

Dense immutable tensors over numpy, a per-thread computation record,
reverse-mode differentiation, counter-based random streams, and the
finite-difference checker that verifies every operation.

Example:
    from multirep.autodiff import ComputationRecord, Tensor, backward, ops

    x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    with ComputationRecord():
        loss = ops.sum(x * x)
        grads = backward(loss)
    grads[x]  # [2, 4, 6]
"""

from multirep.autodiff import ops
from multirep.autodiff.gradcheck import (
    GradCheckReport,
    GradCheckResult,
    check_gradients,
    relative_error,
)
from multirep.autodiff.interface import Function, Mode
from multirep.autodiff.precision import (
    default_dtype,
    get_precision,
    set_precision,
    using_precision,
)
from multirep.autodiff.random import RandomStream
from multirep.autodiff.tensor import (
    ComputationRecord,
    GradientMap,
    Node,
    Tensor,
    as_tensor,
    backward,
    current_record,
)

__all__ = [
    # Core
    "Tensor",
    "as_tensor",
    "ComputationRecord",
    "Node",
    "GradientMap",
    "backward",
    "current_record",
    # Operations
    "Function",
    "Mode",
    "ops",
    # Randomness
    "RandomStream",
    # Precision
    "default_dtype",
    "get_precision",
    "set_precision",
    "using_precision",
    # Gradient checking
    "GradCheckReport",
    "GradCheckResult",
    "check_gradients",
    "relative_error",
]
