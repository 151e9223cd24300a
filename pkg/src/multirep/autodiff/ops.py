"""
Differentiable tensor operations.

Each operation is a Function subclass plus a module-level wrapper that
checks shapes and applies it. Broadcasting follows numpy, which is as
much as the encoder needs (bias rows, per-head masks).
"""

from typing import Optional, Sequence, Union

import numpy as np

from multirep.autodiff.interface import Function, Mode
from multirep.autodiff.random import RandomStream
from multirep.autodiff.tensor import ArrayLike, Tensor, as_tensor
from multirep.exceptions import ContractError, DegenerateVectorError, ShapeError


# Norms below this are treated as degenerate rather than clamped.
MIN_NORM = 1e-8

Axis = Optional[int]


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the input's shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


def _normalize_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise ShapeError(f"axis {axis} out of range for {ndim} dimensions")
    return axis % ndim


# ==================== Elementwise ====================


class Add(Function):
    tag = "add"

    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        return unbroadcast(grad, self.shapes[0]), unbroadcast(grad, self.shapes[1])


class Sub(Function):
    tag = "sub"

    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        return unbroadcast(grad, self.shapes[0]), unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    tag = "mul"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return (
            unbroadcast(grad * self.b, self.a.shape),
            unbroadcast(grad * self.a, self.b.shape),
        )


class Div(Function):
    tag = "div"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        return (
            unbroadcast(grad / self.b, self.a.shape),
            unbroadcast(-grad * self.a / (self.b * self.b), self.b.shape),
        )


class Scale(Function):
    tag = "scale"

    def __init__(self, factor: float):
        self.factor = factor

    def forward(self, a):
        return a * a.dtype.type(self.factor)

    def backward(self, grad):
        return (grad * grad.dtype.type(self.factor),)


class Exp(Function):
    tag = "exp"

    def forward(self, a):
        self.out = np.exp(a)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    tag = "log"

    def forward(self, a):
        self.a = a
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(a)

    def backward(self, grad):
        return (grad / self.a,)


class Gelu(Function):
    """Tanh approximation of the Gaussian error linear unit."""
    tag = "gelu"

    C = np.sqrt(2.0 / np.pi)

    def forward(self, a):
        self.a = a
        self.t = np.tanh(self.C * (a + 0.044715 * a ** 3))
        return 0.5 * a * (1.0 + self.t)

    def backward(self, grad):
        a, t = self.a, self.t
        inner = self.C * (1.0 + 3.0 * 0.044715 * a * a)
        return (grad * (0.5 * (1.0 + t) + 0.5 * a * (1.0 - t * t) * inner),)


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return Add.apply(a, b)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return Sub.apply(a, b)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return Mul.apply(a, b)


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    return Div.apply(a, b)


def scale(a: Tensor, factor: float) -> Tensor:
    return Scale.apply(as_tensor(a), factor=float(factor))


def exp(a: Tensor) -> Tensor:
    return Exp.apply(as_tensor(a))


def log(a: Tensor) -> Tensor:
    return Log.apply(as_tensor(a))


def gelu(a: Tensor) -> Tensor:
    return Gelu.apply(as_tensor(a))


# ==================== Linear algebra & structure ====================


class MatMul(Function):
    tag = "matmul"

    def forward(self, a, b):
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad):
        grad_a = np.matmul(grad, np.swapaxes(self.b, -1, -2))
        grad_b = np.matmul(np.swapaxes(self.a, -1, -2), grad)
        return unbroadcast(grad_a, self.a.shape), unbroadcast(grad_b, self.b.shape)


class Transpose(Function):
    tag = "transpose"

    def __init__(self, axes: Optional[tuple[int, ...]]):
        self.axes = axes

    def forward(self, a):
        self.inverse = None if self.axes is None else tuple(np.argsort(self.axes))
        return np.transpose(a, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, self.inverse),)


class Reshape(Function):
    tag = "reshape"

    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape

    def forward(self, a):
        self.original = a.shape
        return np.reshape(a, self.shape)

    def backward(self, grad):
        return (np.reshape(grad, self.original),)


class Concat(Function):
    tag = "concat"

    def __init__(self, axis: int):
        self.axis = axis

    def forward(self, *arrays):
        self.sizes = [a.shape[self.axis] for a in arrays]
        return np.concatenate(arrays, axis=self.axis)

    def backward(self, grad):
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.axis))


class Stack(Function):
    tag = "stack"

    def __init__(self, axis: int):
        self.axis = axis

    def forward(self, *arrays):
        return np.stack(arrays, axis=self.axis)

    def backward(self, grad):
        return tuple(np.moveaxis(grad, self.axis, 0))


class GatherRows(Function):
    """Row gather along axis 0; also serves as embedding lookup."""
    tag = "gather_rows"

    def __init__(self, indices: np.ndarray):
        self.indices = indices

    def forward(self, a):
        self.shape = a.shape
        return a[self.indices]

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=grad.dtype)
        np.add.at(out, self.indices, grad)
        return (out,)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes.

    Leading axes broadcast, so ``[B, T, d] @ [d, e]`` and batched
    ``[B, h, T, k] @ [B, h, k, T]`` both work.

    Raises:
        ShapeError: If either operand has fewer than two axes or the
            inner dimensions differ.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs at least 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(f"matmul batch dimensions differ: {a.shape} @ {b.shape}") from None
    return MatMul.apply(a, b)


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; reverses them when axes is None."""
    a = as_tensor(a)
    if axes is not None:
        axes = tuple(_normalize_axis(x, a.ndim) for x in axes)
        if sorted(axes) != list(range(a.ndim)):
            raise ShapeError(f"transpose axes {axes} do not permute {a.ndim} dimensions")
    return Transpose.apply(a, axes=axes)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    shape = tuple(int(s) for s in shape)
    try:
        np.empty(a.shape, dtype=np.bool_).reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {a.shape} to {shape}") from None
    return Reshape.apply(a, shape=shape)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate along an existing axis."""
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    axis = _normalize_axis(axis, ndim)
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis
        ):
            raise ShapeError(f"concat shapes disagree: {[x.shape for x in tensors]}")
    return Concat.apply(*tensors, axis=axis)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Stack equally shaped tensors along a new axis."""
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("stack needs at least one tensor")
    if any(t.shape != tensors[0].shape for t in tensors):
        raise ShapeError(f"stack shapes disagree: {[x.shape for x in tensors]}")
    return Stack.apply(*tensors, axis=_normalize_axis(axis, tensors[0].ndim + 1))


def gather_rows(a: Tensor, indices: Union[np.ndarray, Sequence[int]]) -> Tensor:
    """
    Select rows of ``a`` along axis 0.

    The result has shape ``indices.shape + a.shape[1:]``; the gradient
    lands only on the gathered rows.
    """
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    if a.ndim < 1:
        raise ShapeError("gather_rows needs at least 1-D input")
    if indices.size and (indices.min() < -a.shape[0] or indices.max() >= a.shape[0]):
        raise ShapeError(f"row index out of range for {a.shape[0]} rows")
    return GatherRows.apply(a, indices=indices)


def embedding(table: Tensor, ids: Union[np.ndarray, Sequence[int]]) -> Tensor:
    """Embedding lookup: rows of ``table`` for each id."""
    return gather_rows(table, ids)


# ==================== Reductions ====================


class Sum(Function):
    tag = "sum"

    def __init__(self, axis: Axis, keepdims: bool):
        self.axis = axis
        self.keepdims = keepdims

    def forward(self, a):
        self.shape = a.shape
        return np.sum(a, axis=self.axis, keepdims=self.keepdims)

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class LogSumExp(Function):
    tag = "logsumexp"

    def __init__(self, axis: int, keepdims: bool):
        self.axis = axis
        self.keepdims = keepdims

    def forward(self, a):
        peak = np.max(a, axis=self.axis, keepdims=True)
        shifted = np.exp(a - peak)
        total = np.sum(shifted, axis=self.axis, keepdims=True)
        self.weights = shifted / total
        out = peak + np.log(total)
        return out if self.keepdims else np.squeeze(out, axis=self.axis)

    def backward(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (grad * self.weights,)


def sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is not None:
        axis = _normalize_axis(axis, a.ndim)
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[_normalize_axis(axis, a.ndim)]
    if count == 0:
        raise ShapeError("mean over an empty axis")
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def logsumexp(a: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Stable log(sum(exp(a))) along an axis."""
    a = as_tensor(a)
    return LogSumExp.apply(a, axis=_normalize_axis(axis, a.ndim), keepdims=keepdims)


# ==================== Normalisation ====================


class Softmax(Function):
    tag = "softmax"

    def __init__(self, axis: int):
        self.axis = axis

    def forward(self, a):
        shifted = np.exp(a - np.max(a, axis=self.axis, keepdims=True))
        self.out = shifted / np.sum(shifted, axis=self.axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True)),)


class LogSoftmax(Function):
    tag = "log_softmax"

    def __init__(self, axis: int):
        self.axis = axis

    def forward(self, a):
        peak = np.max(a, axis=self.axis, keepdims=True)
        shifted = a - peak
        lse = np.log(np.sum(np.exp(shifted), axis=self.axis, keepdims=True))
        out = shifted - lse
        self.probs = np.exp(out)
        return out

    def backward(self, grad):
        return (grad - self.probs * np.sum(grad, axis=self.axis, keepdims=True),)


class LayerNorm(Function):
    tag = "layer_norm"

    def __init__(self, eps: float):
        self.eps = eps

    def forward(self, x, gamma, beta):
        mu = np.mean(x, axis=-1, keepdims=True)
        centered = x - mu
        var = np.mean(centered * centered, axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + self.eps)
        self.x_hat = centered * self.inv_std
        self.gamma = gamma
        return self.x_hat * gamma + beta

    def backward(self, grad):
        x_hat = self.x_hat
        d_hat = grad * self.gamma
        d_x = self.inv_std * (
            d_hat
            - np.mean(d_hat, axis=-1, keepdims=True)
            - x_hat * np.mean(d_hat * x_hat, axis=-1, keepdims=True)
        )
        lead = tuple(range(grad.ndim - 1))
        return d_x, np.sum(grad * x_hat, axis=lead), np.sum(grad, axis=lead)


class NormalizeRows(Function):
    tag = "normalize_rows"

    def forward(self, a):
        norms = np.sqrt(np.sum(a * a, axis=-1, keepdims=True))
        if np.any(norms < MIN_NORM):
            raise DegenerateVectorError(
                f"vector norm below {MIN_NORM:g} in normalisation"
            )
        self.norms = norms
        self.out = a / norms
        return self.out

    def backward(self, grad):
        y = self.out
        return ((grad - y * np.sum(grad * y, axis=-1, keepdims=True)) / self.norms,)


class Cosine(Function):
    tag = "cosine"

    def forward(self, u, v):
        nu = np.sqrt(np.dot(u, u))
        nv = np.sqrt(np.dot(v, v))
        if nu < MIN_NORM or nv < MIN_NORM:
            raise DegenerateVectorError(
                f"cosine of a vector with norm below {MIN_NORM:g}"
            )
        self.u, self.v, self.nu, self.nv = u, v, nu, nv
        self.c = np.dot(u, v) / (nu * nv)
        return self.c

    def backward(self, grad):
        u, v, nu, nv, c = self.u, self.v, self.nu, self.nv, self.c
        grad_u = grad * (v / (nu * nv) - c * u / (nu * nu))
        grad_v = grad * (u / (nu * nv) - c * v / (nv * nv))
        return grad_u, grad_v


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Softmax with max subtraction; outputs are positive and sum to 1."""
    a = as_tensor(a)
    if a.ndim == 0 or a.shape[axis] < 1:
        raise ShapeError("softmax needs a non-empty axis")
    return Softmax.apply(a, axis=_normalize_axis(axis, a.ndim))


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    if a.ndim == 0 or a.shape[axis] < 1:
        raise ShapeError("log_softmax needs a non-empty axis")
    return LogSoftmax.apply(a, axis=_normalize_axis(axis, a.ndim))


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-12) -> Tensor:
    """
    Normalise the last axis to zero mean and unit variance, then apply
    ``gamma`` and ``beta``.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if eps <= 0:
        raise ContractError("layer_norm eps must be positive")
    d = x.shape[-1] if x.ndim else 0
    if d < 1 or gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(
            f"layer_norm: input {x.shape} needs gamma and beta of shape ({d},), "
            f"got {gamma.shape} and {beta.shape}"
        )
    return LayerNorm.apply(x, gamma, beta, eps=eps)


def normalize_rows(a: Tensor) -> Tensor:
    """
    Scale every vector along the last axis to unit length.

    Raises:
        DegenerateVectorError: If any vector has norm below MIN_NORM.
    """
    return NormalizeRows.apply(as_tensor(a))


def cosine(u: Tensor, v: Tensor) -> Tensor:
    """
    Cosine similarity of two vectors.

    Raises:
        ShapeError: If u and v are not 1-D of equal length.
        DegenerateVectorError: If either norm is below MIN_NORM.
    """
    u, v = as_tensor(u), as_tensor(v)
    if u.ndim != 1 or u.shape != v.shape:
        raise ShapeError(f"cosine needs equal-length vectors, got {u.shape} and {v.shape}")
    return Cosine.apply(u, v)


def pairwise_cosine(a: Tensor, b: Tensor) -> Tensor:
    """Cosine between every row of ``a`` [.., n, d] and of ``b`` [.., m, d]."""
    a_hat = normalize_rows(a)
    b_hat = normalize_rows(b)
    axes = list(range(b_hat.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return matmul(a_hat, transpose(b_hat, axes))


# ==================== Dropout ====================


class DropoutMask(Function):
    tag = "dropout"

    def __init__(self, mask: np.ndarray, rate: float):
        self.mask = mask
        self.rate = rate

    def forward(self, a):
        self.factor = (self.mask / (1.0 - self.rate)).astype(a.dtype)
        return a * self.factor

    def backward(self, grad):
        return (grad * self.factor,)


def apply_dropout_mask(a: Tensor, keep: np.ndarray, rate: float) -> Tensor:
    """Zero entries where ``keep`` is False and scale survivors by 1/(1-rate)."""
    a = as_tensor(a)
    keep = np.asarray(keep, dtype=bool)
    if keep.shape != a.shape:
        raise ShapeError(f"dropout mask shape {keep.shape} differs from input {a.shape}")
    return DropoutMask.apply(a, mask=keep, rate=rate)


def dropout(
    a: Tensor,
    rate: float,
    mode: Mode,
    stream: Optional[RandomStream] = None,
) -> Tensor:
    """
    Inverted dropout.

    In train mode each entry is dropped with probability ``rate`` using
    the next draw of ``stream``; in eval mode, or at rate 0, the input is
    returned unchanged.

    Raises:
        ContractError: If rate is outside [0, 1) or a train-mode call has
            no stream.
    """
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {rate}")
    a = as_tensor(a)
    if Mode(mode) is Mode.EVAL or rate == 0.0:
        return a
    if stream is None:
        raise ContractError("train-mode dropout needs a random stream")
    keep = stream.keep_mask(a.shape, 1.0 - rate)
    return apply_dropout_mask(a, keep, rate)
