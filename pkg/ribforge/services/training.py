"""
Helpers shared by the training services
"""
import logging
import math
from typing import Callable, Iterator, List, Optional

import numpy as np

from ribforge.core.errors import ConfigError, NonFiniteLossError
from ribforge.core.rng import make_rng
from ribforge.nn import SGD, Adam, Module
from ribforge.nn.optim import Optimizer
from ribforge.schemas.configs import OptimizerConfig
from ribforge.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

PREDICT_BATCH = 8


def to_network_range(images: np.ndarray) -> np.ndarray:
    """[0, 1] images -> [-1, 1] network inputs"""
    return (images * 2.0 - 1.0).astype(np.float32)


def to_image_range(outputs: np.ndarray) -> np.ndarray:
    """tanh outputs in (-1, 1) -> [0, 1]"""
    return np.clip((outputs + 1.0) * 0.5, 0.0, 1.0).astype(np.float32)


def epoch_batches(n: int, batch_size: int, seed: int, epoch: int, stage: str) -> Iterator[np.ndarray]:
    """Shuffled index batches for one epoch; the last batch may be short"""
    order = make_rng(seed, stage, "shuffle", epoch).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def check_finite(value: float, stage: str, epoch: int, batch: int, series: str) -> float:
    if not math.isfinite(value):
        message = f"{stage}: non-finite {series} loss ({value}) at epoch {epoch}, batch {batch}"
        logger.error(message)
        raise NonFiniteLossError(message)
    return value


def build_optimizer(params, cfg: OptimizerConfig) -> Optimizer:
    if cfg.kind == "adam":
        return Adam(params, lr=cfg.lr, betas=cfg.betas, eps=cfg.eps, weight_decay=cfg.weight_decay)
    if cfg.kind == "sgd":
        return SGD(params, lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    raise ConfigError(f"unknown optimizer kind '{cfg.kind}'")


def predict(model: Module, images: np.ndarray, batch_size: int = PREDICT_BATCH) -> np.ndarray:
    """Eval-mode forward without graph recording; ``images`` are network inputs"""
    was_training = model.training
    model.eval()
    outputs: List[np.ndarray] = []
    try:
        with no_grad():
            for start in range(0, len(images), batch_size):
                outputs.append(model(Tensor(images[start:start + batch_size])).data)
    finally:
        model.train(was_training)
    return np.concatenate(outputs, axis=0)


def mean_loss(model: Module, loss_fn: Callable, images: np.ndarray, targets: np.ndarray,
              batch_size: int = PREDICT_BATCH) -> float:
    """Sample-weighted mean of ``loss_fn`` over a dataset in eval mode"""
    was_training = model.training
    model.eval()
    total, count = [], 0
    try:
        with no_grad():
            for start in range(0, len(images), batch_size):
                x = images[start:start + batch_size]
                loss = loss_fn(model(Tensor(x)), targets[start:start + batch_size])
                total.append(loss.item() * len(x))
                count += len(x)
    finally:
        model.train(was_training)
    return math.fsum(total) / count


class StepBudget:
    """Optional cap on optimizer steps across epochs"""

    def __init__(self, max_steps: Optional[int]):
        self.max_steps = max_steps
        self.steps = 0

    def take(self) -> None:
        self.steps += 1

    @property
    def exhausted(self) -> bool:
        return self.max_steps is not None and self.steps >= self.max_steps
