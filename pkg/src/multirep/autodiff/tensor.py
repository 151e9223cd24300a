"""
Tensor and computation record.

A Tensor is an immutable dense array. Operations on tensors that require
gradients are appended to the active ComputationRecord, and `backward`
walks that record in reverse creation order.
"""

from dataclasses import dataclass
from threading import local
from typing import Any, Iterator, Optional, Sequence, TYPE_CHECKING, Union

import numpy as np

from multirep.autodiff.precision import default_dtype
from multirep.exceptions import ContractError

if TYPE_CHECKING:
    from multirep.autodiff.interface import Function


ArrayLike = Union["Tensor", np.ndarray, Sequence[Any], float, int]


class Tensor:
    """
    Immutable dense tensor with optional gradient tracking.

    The data is a read-only numpy array in the active precision. Tensors
    created by an operation under a ComputationRecord carry the id of
    their node in that record.

    Example:
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        with ComputationRecord():
            loss = (x * x).sum()
            grads = backward(loss)
        grads[x]  # array([2., 4., 6.])
    """

    __slots__ = ("_data", "requires_grad", "node_id", "name", "_record")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype: Optional[np.dtype] = None,
    ):
        if isinstance(data, Tensor):
            data = data.data
        array = np.array(data, dtype=dtype or default_dtype())
        array.setflags(write=False)
        self._data = array
        self.requires_grad = requires_grad
        self.node_id: Optional[int] = None
        self.name = name
        self._record: Optional["ComputationRecord"] = None

    @classmethod
    def _wrap(
        cls,
        array: np.ndarray,
        record: Optional["ComputationRecord"] = None,
        node_id: Optional[int] = None,
    ) -> "Tensor":
        """Wrap an op result without copying or casting."""
        out = cls.__new__(cls)
        array.setflags(write=False)
        out._data = array
        out.requires_grad = record is not None
        out.node_id = node_id
        out.name = None
        out._record = record
        return out

    # --- Properties ---

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    @property
    def record(self) -> Optional["ComputationRecord"]:
        """Record this tensor was produced in, if any."""
        return self._record

    def item(self) -> float:
        """Value of a one-element tensor."""
        if self._data.size != 1:
            raise ContractError(f"item() needs one element, tensor has shape {self.shape}")
        return float(self._data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Writable copy of the data."""
        return self._data.copy()

    def detach(self) -> "Tensor":
        """Same values, no gradient tracking."""
        return Tensor._wrap(self._data)

    # --- Operators ---

    def __add__(self, other: ArrayLike) -> "Tensor":
        from multirep.autodiff import ops
        return ops.add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        from multirep.autodiff import ops
        return ops.add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        from multirep.autodiff import ops
        return ops.sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        from multirep.autodiff import ops
        return ops.sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        from multirep.autodiff import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return self.__mul__(other)

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        from multirep.autodiff import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, 1.0 / float(other))
        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        from multirep.autodiff import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from multirep.autodiff import ops
        return ops.matmul(self, other)

    # --- Shorthands ---

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        from multirep.autodiff import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        from multirep.autodiff import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        from multirep.autodiff import ops
        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from multirep.autodiff import ops
        return ops.transpose(self, axes or None)

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{grad}{label})"


def as_tensor(value: ArrayLike) -> Tensor:
    """Return value unchanged if it is a Tensor, else a constant Tensor."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


# ==================== Computation record ====================


@dataclass
class Node:
    """One entry of a computation record."""
    tag: str
    inputs: tuple[Optional[int], ...]
    function: Optional["Function"] = None
    leaf: Optional[Tensor] = None


_active = local()


def _stack() -> list["ComputationRecord"]:
    if not hasattr(_active, "records"):
        _active.records = []
    return _active.records


def current_record() -> Optional["ComputationRecord"]:
    """The innermost active record on this thread, or None."""
    stack = _stack()
    return stack[-1] if stack else None


class ComputationRecord:
    """
    Ordered record of differentiable operations.

    Nodes are appended in creation order, so every input id precedes its
    consumer. A record is active inside a ``with`` block and is local to
    the thread that entered it; operations run outside any record are
    not recorded.

    Example:
        with ComputationRecord() as record:
            y = ops.exp(x)
        len(record)  # 2 (leaf for x, exp)
    """

    def __init__(self):
        self._nodes: list[Node] = []
        self._leaf_ids: dict[int, int] = {}

    def __enter__(self) -> "ComputationRecord":
        _stack().append(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self._nodes)

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes)

    def input_id(self, tensor: Tensor) -> Optional[int]:
        """
        Node id for an operation input.

        Tensors produced in this record use their own node; other tensors
        that require gradients become leaves; constants get None.
        """
        if tensor.record is self and tensor.node_id is not None:
            return tensor.node_id
        if not tensor.requires_grad:
            return None
        key = id(tensor)
        if key not in self._leaf_ids:
            self._nodes.append(Node(tag="leaf", inputs=(), leaf=tensor))
            self._leaf_ids[key] = len(self._nodes) - 1
        return self._leaf_ids[key]

    def add(
        self,
        tag: str,
        function: "Function",
        inputs: tuple[Optional[int], ...],
    ) -> int:
        """Append an operation node and return its id."""
        self._nodes.append(Node(tag=tag, inputs=inputs, function=function))
        return len(self._nodes) - 1

    def leaves(self) -> list[Tensor]:
        """Leaf tensors registered in this record, in order of first use."""
        return [node.leaf for node in self._nodes if node.leaf is not None]


# ==================== Backward ====================


class GradientMap:
    """
    Gradients keyed by tensor identity.

    Looking up a tensor that requires gradients but did not take part in
    the loss returns zeros of its shape.
    """

    def __init__(self, entries: Optional[dict[int, tuple[Tensor, np.ndarray]]] = None):
        self._entries = entries or {}

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        entry = self._entries.get(id(tensor))
        if entry is not None and entry[0] is tensor:
            return entry[1]
        if tensor.requires_grad:
            return np.zeros(tensor.shape, dtype=tensor.dtype)
        raise KeyError(f"{tensor!r} does not require gradients")

    def __contains__(self, tensor: Tensor) -> bool:
        entry = self._entries.get(id(tensor))
        return entry is not None and entry[0] is tensor

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> Iterator[tuple[Tensor, np.ndarray]]:
        return iter(self._entries.values())


def backward(loss: Tensor) -> GradientMap:
    """
    Reverse-mode pass from a scalar loss.

    Args:
        loss: Scalar tensor produced inside a ComputationRecord.

    Returns:
        GradientMap over every leaf the loss depends on.

    Raises:
        ContractError: If the loss is not scalar or not recorded.
    """
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    record = loss.record
    if record is None or loss.node_id is None:
        raise ContractError("loss was not produced inside a ComputationRecord")

    nodes = record.nodes
    pending: dict[int, np.ndarray] = {loss.node_id: np.ones(loss.shape, dtype=loss.dtype)}
    leaves: dict[int, tuple[Tensor, np.ndarray]] = {}

    for node_id in range(loss.node_id, -1, -1):
        grad = pending.pop(node_id, None)
        if grad is None:
            continue
        node = nodes[node_id]
        if node.leaf is not None:
            leaves[id(node.leaf)] = (node.leaf, grad)
            continue
        input_grads = node.function.backward(grad)
        for input_id, input_grad in zip(node.inputs, input_grads):
            if input_id is None or input_grad is None:
                continue
            if input_id in pending:
                pending[input_id] = pending[input_id] + input_grad
            else:
                pending[input_id] = input_grad

    return GradientMap(leaves)
