"""
Adam and SGD-momentum optimizers
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ribforge.core.errors import ShapeError
from .module import Parameter

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    """Hyperparameters, step counter and per-parameter auxiliary buffers"""
    lr: float
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    momentum: float = 0.0
    weight_decay: float = 0.0
    step: int = 0
    buffers: Dict[str, List[np.ndarray]] = field(default_factory=dict)

    def ensure(self, name: str, params: Sequence[np.ndarray]) -> List[np.ndarray]:
        """Zero-initialized buffers matching ``params``; validated on every call"""
        if name not in self.buffers:
            self.buffers[name] = [np.zeros_like(p) for p in params]
        bufs = self.buffers[name]
        if len(bufs) != len(params) or any(b.shape != p.shape for b, p in zip(bufs, params)):
            raise ShapeError(f"optimizer buffer '{name}' does not match parameter shapes")
        return bufs


def _check(params: Sequence[np.ndarray], grads: Sequence[Optional[np.ndarray]]) -> None:
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if g is not None and g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")


def adam_step(params: Sequence[np.ndarray], grads: Sequence[Optional[np.ndarray]], state: OptimizerState) -> None:
    """Bias-corrected Adam; parameters are updated in place"""
    _check(params, grads)
    m_bufs = state.ensure("exp_avg", params)
    v_bufs = state.ensure("exp_avg_sq", params)
    state.step += 1
    b1, b2 = state.betas
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, m_bufs, v_bufs):
        if g is None:
            continue
        if state.weight_decay:
            g = g + state.weight_decay * p
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / c1
        v_hat = v / c2
        p -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype, copy=False)


def sgd_momentum_step(params: Sequence[np.ndarray], grads: Sequence[Optional[np.ndarray]], state: OptimizerState) -> None:
    """g' = g + wd*w; v = momentum*v + g'; w = w - lr*v (in place)"""
    _check(params, grads)
    velocity = state.ensure("velocity", params)
    state.step += 1
    for p, g, v in zip(params, grads, velocity):
        if g is None:
            continue
        if state.weight_decay:
            g = g + state.weight_decay * p
        v *= state.momentum
        v += g
        p -= (state.lr * v).astype(p.dtype, copy=False)


class Optimizer:
    """Binds a parameter list to a stepping rule and its state"""

    rule = None

    def __init__(self, parameters: Sequence[Parameter], state: OptimizerState):
        self.parameters = list(parameters)
        self.state = state

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = float(value)

    def step(self) -> None:
        type(self).rule([p.data for p in self.parameters], [p.grad for p in self.parameters], self.state)

    def zero_grad(self) -> None:
        for p in self.parameters:
            p.grad = None


class Adam(Optimizer):
    rule = staticmethod(adam_step)

    def __init__(self, parameters, lr: float, betas=(0.9, 0.999), eps: float = 1e-8, weight_decay: float = 0.0):
        super().__init__(parameters, OptimizerState(lr=lr, betas=tuple(betas), eps=eps, weight_decay=weight_decay))


class SGD(Optimizer):
    rule = staticmethod(sgd_momentum_step)

    def __init__(self, parameters, lr: float, momentum: float = 0.9, weight_decay: float = 0.0):
        super().__init__(parameters, OptimizerState(lr=lr, momentum=momentum, weight_decay=weight_decay))
