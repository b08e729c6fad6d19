"""
Elementwise, matmul, activation, reduction and shape primitives
"""
from typing import Sequence, Tuple, Union

import numpy as np

from ribforge.core.errors import ShapeError, TensorError
from .tensor import Tensor, as_tensor, make_result

Operand = Union[Tensor, float, int, np.ndarray]


def _pair(a: Operand, b: Operand) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = as_tensor(b, dtype=a.dtype)
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = as_tensor(a, dtype=b.dtype)
    else:
        a, b = as_tensor(a), as_tensor(b)
    return a, b


def broadcast_shape(a: Sequence[int], b: Sequence[int]) -> Tuple[int, ...]:
    """Trailing-dimension broadcasting: extents must match or be 1"""
    try:
        return tuple(np.broadcast_shapes(tuple(a), tuple(b)))
    except ValueError:
        raise ShapeError(f"shapes {tuple(a)} and {tuple(b)} are not broadcast-compatible") from None


def unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``"""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- elementwise -----------------------------------------------------------
def add(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return make_result(a.data + b.data, (a, b), backward, "add")


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    broadcast_shape(a.shape, b.shape)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return make_result(a.data - b.data, (a, b), backward, "sub")


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _pair(a, b)
    broadcast_shape(a.shape, b.shape)

    def backward(g):
        ga = unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return make_result(a.data * b.data, (a, b), backward, "mul")


def div(a: Operand, b: Operand) -> Tensor:
    """Division; zero divisors propagate inf/nan instead of trapping"""
    a, b = _pair(a, b)
    broadcast_shape(a.shape, b.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data

    def backward(g):
        with np.errstate(divide="ignore", invalid="ignore"):
            ga = unbroadcast(g / b.data, a.shape) if a.requires_grad else None
            gb = unbroadcast(-g * a.data / (b.data * b.data), b.shape) if b.requires_grad else None
        return ga, gb

    return make_result(out, (a, b), backward, "div")


def elementwise(op: str, a: Operand, b: Operand) -> Tensor:
    """Dispatch by name: add | sub | mul | div"""
    table = {"add": add, "sub": sub, "mul": mul, "div": div}
    if op not in table:
        raise TensorError(f"unknown elementwise op '{op}'")
    return table[op](a, b)


def neg(a: Tensor) -> Tensor:
    return make_result(-a.data, (a,), lambda g: (-g,), "neg")


def cast(a: Tensor, dtype) -> Tensor:
    source = a.dtype
    return make_result(a.data.astype(dtype), (a,), lambda g: (g.astype(source),), "cast")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return make_result(out, (a,), lambda g: (g * out,), "exp")


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return make_result(out, (a,), lambda g: (g / a.data,), "log")


def clip(a: Tensor, low: float, high: float) -> Tensor:
    """Clamp to [low, high]; gradient is zero outside the interval"""
    out = np.clip(a.data, low, high)
    inside = (a.data >= low) & (a.data <= high)
    return make_result(out, (a,), lambda g: (g * inside,), "clip")


# -- matmul ----------------------------------------------------------------
def matmul(a: Operand, b: Operand) -> Tensor:
    """Matrix product over the last two axes with broadcast leading batch axes"""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    broadcast_shape(a.shape[:-2], b.shape[:-2])
    out = np.matmul(a.data, b.data)

    def backward(g):
        ga = unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape) if a.requires_grad else None
        gb = unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape) if b.requires_grad else None
        return ga, gb

    return make_result(out, (a, b), backward, "matmul")


# -- activations -----------------------------------------------------------
def relu(a: Tensor) -> Tensor:
    active = a.data > 0
    return make_result(np.where(active, a.data, 0).astype(a.dtype), (a,), lambda g: (g * active,), "relu")


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    active = a.data > 0
    factor = np.where(active, 1.0, slope).astype(a.dtype)
    return make_result(a.data * factor, (a,), lambda g: (g * factor,), "leaky_relu")


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype)


def sigmoid(a: Tensor) -> Tensor:
    out = _stable_sigmoid(a.data)
    return make_result(out, (a,), lambda g: (g * out * (1 - out),), "sigmoid")


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return make_result(out, (a,), lambda g: (g * (1 - out * out),), "tanh")


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    if not -a.ndim <= axis < a.ndim:
        raise TensorError(f"softmax axis {axis} invalid for rank {a.ndim}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make_result(out, (a,), backward, "softmax")


def activation(kind: str, a: Tensor, axis: int = -1, slope: float = 0.2) -> Tensor:
    """Dispatch by name: relu | leaky_relu | sigmoid | tanh | softmax"""
    if kind == "relu":
        return relu(a)
    if kind == "leaky_relu":
        return leaky_relu(a, slope)
    if kind == "sigmoid":
        return sigmoid(a)
    if kind == "tanh":
        return tanh(a)
    if kind == "softmax":
        return softmax(a, axis)
    raise TensorError(f"unknown activation '{kind}'")


# -- reductions ------------------------------------------------------------
def _norm_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return make_result(np.asarray(out), (a,), backward, "sum")


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _norm_axes(axis, a.ndim)
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    out = a.data.sum(axis=axes, keepdims=keepdims) / a.dtype.type(count)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / a.dtype.type(count), a.shape).copy(),)

    return make_result(np.asarray(out), (a,), backward, "mean")


# -- shape ops -------------------------------------------------------------
def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"cannot reshape {a.shape} ({a.size} elements) to {tuple(shape)}") from None
    return make_result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def permute(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(ax % a.ndim for ax in axes) != list(range(a.ndim)):
        raise ShapeError(f"permutation {axes} invalid for rank {a.ndim}")
    inverse = tuple(np.argsort([ax % a.ndim for ax in axes]))
    return make_result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),), "permute")


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    ref = tensors[0].shape
    ax = axis % len(ref)
    for t in tensors[1:]:
        if t.ndim != len(ref) or any(s != r for i, (s, r) in enumerate(zip(t.shape, ref)) if i != ax):
            raise ShapeError(f"concat along axis {axis}: {t.shape} disagrees with {ref}")
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=ax))

    return make_result(np.concatenate([t.data for t in tensors], axis=ax), tuple(tensors), backward, "concat")


def slice_(a: Tensor, index) -> Tensor:
    """Basic (non-fancy) indexing"""
    out = a.data[index]

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return make_result(np.ascontiguousarray(out), (a,), backward, "slice")


def shape_op(kind: str, *args, **kwargs) -> Tensor:
    """Dispatch by name: concat | reshape | permute | slice"""
    table = {"concat": concat, "reshape": reshape, "permute": permute, "slice": slice_}
    if kind not in table:
        raise TensorError(f"unknown shape op '{kind}'")
    return table[kind](*args, **kwargs)


def pad2d(a: Tensor, pad: Union[int, Tuple[int, int, int, int]], mode: str = "zeros") -> Tensor:
    """Pad the two trailing axes by (top, bottom, left, right)"""
    if isinstance(pad, int):
        pad = (pad, pad, pad, pad)
    top, bottom, left, right = pad
    if min(pad) < 0:
        raise ShapeError(f"negative padding {pad}")
    H, W = a.shape[-2:]
    widths = [(0, 0)] * (a.ndim - 2) + [(top, bottom), (left, right)]
    if mode == "zeros":
        out = np.pad(a.data, widths, mode="constant")

        def backward(g):
            return (np.ascontiguousarray(g[..., top:top + H, left:left + W]),)
    elif mode == "replicate":
        if H == 0 or W == 0:
            raise ShapeError("replicate padding needs non-empty extents")
        out = np.pad(a.data, widths, mode="edge")

        def backward(g):
            rows = g[..., top:top + H, :].copy()
            if top:
                rows[..., 0, :] += g[..., :top, :].sum(axis=-2)
            if bottom:
                rows[..., H - 1, :] += g[..., top + H:, :].sum(axis=-2)
            cols = rows[..., left:left + W].copy()
            if left:
                cols[..., 0] += rows[..., :left].sum(axis=-1)
            if right:
                cols[..., W - 1] += rows[..., left + W:].sum(axis=-1)
            return (cols,)
    else:
        raise TensorError(f"unknown padding mode '{mode}'")
    return make_result(out, (a,), backward, "pad2d")
