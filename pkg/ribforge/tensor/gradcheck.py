"""
Central-difference gradient checker
"""
import logging
from typing import Callable, Optional, Sequence

import numpy as np

from ribforge.core.rng import make_rng
from .tensor import Tensor, backward, no_grad

logger = logging.getLogger(__name__)


def _to_scalar(out: Tensor, weights: Optional[np.ndarray]) -> Tensor:
    if weights is None:
        return out.sum() if out.size != 1 else out.reshape(())
    return (out * Tensor(weights, dtype=out.dtype)).sum()


def grad_check(
    fn: Callable[..., Tensor],
    inputs: Sequence,
    eps: float = 1e-4,
    dtype=np.float64,
    wrt: Optional[Sequence[int]] = None,
    seed: int = 0,
) -> float:
    """Return the max relative error between analytic and central-difference grads

    Non-scalar outputs are reduced with a fixed positive random projection so
    that every output element contributes. Relative error per element is
    |a - n| / max(|a|, |n|, 1e-8). ``wrt`` selects which inputs are checked;
    the rest are passed as constants.
    """
    wrt = list(range(len(inputs))) if wrt is None else list(wrt)
    leaves = []
    for i, value in enumerate(inputs):
        data = value.data if isinstance(value, Tensor) else value
        leaves.append(Tensor(np.array(data, dtype=dtype), requires_grad=i in wrt, dtype=dtype))

    out = fn(*leaves)
    weights = None
    if out.size != 1:
        weights = make_rng(seed, "gradcheck").uniform(0.5, 1.5, size=out.shape).astype(dtype)
    loss = _to_scalar(out, weights)
    backward(loss)

    def evaluate() -> float:
        with no_grad():
            return float(_to_scalar(fn(*leaves), weights).data)

    worst = 0.0
    for i in wrt:
        leaf = leaves[i]
        analytic = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
        flat = leaf.data.reshape(-1)
        flat_grad = analytic.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + eps
            f_plus = evaluate()
            flat[k] = original - eps
            f_minus = evaluate()
            flat[k] = original
            numeric = (f_plus - f_minus) / (2 * eps)
            a = float(flat_grad[k])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            if err > worst:
                worst = err
    logger.debug(f"grad_check: {sum(leaves[i].size for i in wrt)} elements, max relative error {worst:.3e}")
    return worst
