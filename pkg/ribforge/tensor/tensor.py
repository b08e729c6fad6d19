"""
Tensor, graph nodes and the backward tape.

The graph is built define-by-run: every differentiable op executed while grad
mode is on creates a ``Node`` stamped with a monotonically increasing sequence
number. ``backward`` collects the nodes reachable from the loss into a ``Tape``
ordered by that number and replays them in exact reverse execution order.
"""
import itertools
import logging
import threading
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ribforge.core.errors import BackwardError, TensorError
from ribforge.core.rng import make_rng

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float32
MAX_ELEMENTS = 2**31 - 1

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

# grad mode is per thread; the node sequence is process-wide, so seq values
# never repeat across threads and increase within each thread
_state = threading.local()
_sequence = itertools.count()
_sequence_lock = threading.Lock()


def _next_seq() -> int:
    with _sequence_lock:
        return next(_sequence)


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block"""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Node:
    """One executed differentiable operation"""

    __slots__ = ("op", "inputs", "backward_fn", "seq", "out_id", "consumed")

    def __init__(self, op: str, inputs: Tuple["Tensor", ...], backward_fn: BackwardFn):
        self.op = op
        self.inputs = inputs
        self.backward_fn = backward_fn
        self.seq = _next_seq()
        self.out_id = -1
        self.consumed = False

    def __repr__(self):
        return f"<Node(op='{self.op}', seq={self.seq})>"


class Tensor:
    """Dense array with optional gradient tracking"""

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        array = np.asarray(data, dtype=dtype if dtype is not None else None)
        if dtype is None and array.dtype not in (np.float32, np.float64):
            array = array.astype(DEFAULT_DTYPE)
        self.data: np.ndarray = array
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._node: Optional[Node] = None

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise TensorError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def astype(self, dtype) -> "Tensor":
        from . import ops
        return ops.cast(self, dtype)

    def __repr__(self):
        return f"<Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})>"

    def __len__(self):
        return self.shape[0]

    # -- operators (implemented in ops) ---------------------------------
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops
        return ops.div(other, self)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.slice_(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from . import ops
        return ops.sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        from . import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def permute(self, *axes) -> "Tensor":
        from . import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.permute(self, axes)

    def backward(self) -> None:
        backward(self)


def as_tensor(value: ArrayLike, dtype=None) -> Tensor:
    """Wrap constants; tensors pass through untouched"""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype or DEFAULT_DTYPE))


def make_result(data: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op's output, recording a node when any input tracks gradients"""
    tracked = is_grad_enabled() and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=tracked, dtype=data.dtype)
    if tracked:
        node = Node(op, tuple(inputs), backward_fn)
        node.out_id = id(out)
        out._node = node
    return out


# -- creation -----------------------------------------------------------
def _check_shape(shape: Sequence[int]) -> Tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if any(s < 0 for s in shape):
        raise TensorError(f"extents must be non-negative, got {shape}")
    count = 1
    for s in shape:
        count *= s
        if count > MAX_ELEMENTS:
            raise TensorError(f"shape {shape} exceeds the addressable buffer size ({MAX_ELEMENTS} elements)")
    return shape


def create(
    shape: Sequence[int],
    init: str = "zeros",
    *,
    value: float = 0.0,
    low: float = 0.0,
    high: float = 1.0,
    mean: float = 0.0,
    std: float = 1.0,
    seed: Optional[int] = None,
    dtype=DEFAULT_DTYPE,
    requires_grad: bool = False,
) -> Tensor:
    """Create a tensor deterministically from an init kind

    Random inits (``uniform``, ``normal``) draw float64 from the Philox stream of
    ``seed`` and then cast, so the same (init, seed, shape) is bit-identical.
    """
    shape = _check_shape(shape)
    if init == "zeros":
        data = np.zeros(shape, dtype=dtype)
    elif init == "ones":
        data = np.ones(shape, dtype=dtype)
    elif init == "constant":
        data = np.full(shape, value, dtype=dtype)
    elif init in ("uniform", "normal"):
        if seed is None:
            raise TensorError(f"init '{init}' requires a seed")
        rng = make_rng(seed)
        if init == "uniform":
            data = rng.uniform(low, high, size=shape).astype(dtype)
        else:
            data = (mean + std * rng.standard_normal(size=shape)).astype(dtype)
    else:
        raise TensorError(f"unknown init kind '{init}'")
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


def zeros_like(t: Tensor) -> Tensor:
    return Tensor(np.zeros_like(t.data))


def ones_like(t: Tensor) -> Tensor:
    return Tensor(np.ones_like(t.data))


# -- backward -----------------------------------------------------------
class Tape:
    """Nodes reachable from a loss, in execution order"""

    def __init__(self, nodes: List[Node], tensors: Dict[int, Tensor]):
        self.nodes = nodes
        self.tensors = tensors

    @classmethod
    def from_loss(cls, loss: Tensor) -> "Tape":
        nodes: Dict[int, Node] = {}
        tensors: Dict[int, Tensor] = {id(loss): loss}
        stack = [loss]
        while stack:
            t = stack.pop()
            node = t._node
            if node is None or node.seq in nodes:
                continue
            if node.consumed:
                raise BackwardError(
                    f"graph through op '{node.op}' was already used by a backward pass; re-run the forward"
                )
            nodes[node.seq] = node
            for parent in node.inputs:
                if parent.requires_grad:
                    tensors.setdefault(id(parent), parent)
                    stack.append(parent)
        ordered = [nodes[k] for k in sorted(nodes)]
        return cls(ordered, tensors)

    def run(self, seed_grad: np.ndarray, loss_id: int) -> Dict[int, np.ndarray]:
        grads: Dict[int, np.ndarray] = {loss_id: seed_grad}
        for node in reversed(self.nodes):
            g = grads.get(node.out_id)
            node.consumed = True
            if g is None:
                continue
            parent_grads = node.backward_fn(g)
            for parent, pg in zip(node.inputs, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                if pg.shape != parent.shape:
                    raise BackwardError(
                        f"op '{node.op}' produced gradient {pg.shape} for input of shape {parent.shape}"
                    )
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg
            node.backward_fn = _released
        return grads


def _released(_g):
    raise BackwardError("node already released by a previous backward pass")


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` of every requires_grad tensor reachable from ``loss``"""
    if loss.data.size != 1:
        raise BackwardError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise BackwardError("loss does not require grad; nothing to differentiate")
    tape = Tape.from_loss(loss)
    grads = tape.run(np.ones_like(loss.data), id(loss))
    for key, g in grads.items():
        t = tape.tensors.get(key)
        if t is None or not t.requires_grad:
            continue
        g = g.astype(t.dtype, copy=False)
        t.grad = g.copy() if t.grad is None else t.grad + g
    # intermediate nodes are done; drop references so activations can be freed
    for node in tape.nodes:
        node.inputs = ()
    logger.debug(f"backward replayed {len(tape.nodes)} ops")
