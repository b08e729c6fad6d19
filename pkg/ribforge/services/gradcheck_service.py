"""
Finite-difference verification of every differentiable op and loss
"""
import logging
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from ribforge.core.errors import ConfigError, GradCheckError
from ribforge.core.rng import make_rng
from ribforge.nn.losses import bce_loss, dice_loss, discriminator_loss, generator_loss, seg_loss
from ribforge.schemas.reports import GradCheckResult
from ribforge.tensor import (
    add,
    batchnorm2d,
    clip,
    concat,
    conv2d,
    conv_transpose2d,
    div,
    exp,
    global_avg_pool,
    grad_check,
    layernorm,
    leaky_relu,
    log,
    matmul,
    mean,
    mul,
    pad2d,
    permute,
    pool2d,
    relu,
    reshape,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
    upsample_bilinear,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-5
DEFAULT_SEEDS = (0, 1, 2)
KINK_MARGIN = 1e-2

Case = Tuple[Callable, List[np.ndarray]]


def _normal(rng, *shape) -> np.ndarray:
    return rng.normal(0.0, 1.0, size=shape)


def _away_from_zero(rng, *shape) -> np.ndarray:
    """Magnitudes in [KINK_MARGIN*10, 1] with random signs"""
    magnitude = rng.uniform(KINK_MARGIN * 10, 1.0, size=shape)
    return magnitude * rng.choice([-1.0, 1.0], size=shape)


def _distinct(rng, *shape) -> np.ndarray:
    """Values spaced well apart, so no max-pool window has a near tie"""
    n = int(np.prod(shape))
    return (rng.permutation(n).astype(np.float64) * 0.05).reshape(shape)


def _probabilities(rng, *shape) -> np.ndarray:
    return rng.uniform(0.1, 0.9, size=shape)


def _binary(rng, *shape) -> np.ndarray:
    return (rng.random(shape) < 0.5).astype(np.float64)


def _cases(rng: np.random.Generator) -> Dict[str, Case]:
    target = _binary(rng, 2, 3, 4, 4)
    return {
        "add": (lambda a, b: add(a, b), [_normal(rng, 2, 3), _normal(rng, 2, 1)]),
        "sub": (lambda a, b: sub(a, b), [_normal(rng, 2, 3), _normal(rng, 3)]),
        "mul": (lambda a, b: mul(a, b), [_normal(rng, 2, 3), _normal(rng, 2, 3)]),
        "div": (lambda a, b: div(a, b), [_normal(rng, 2, 3), rng.uniform(0.5, 2.0, size=(2, 3))]),
        "exp": (lambda a: exp(a), [_normal(rng, 3, 4)]),
        "log": (lambda a: log(a), [rng.uniform(0.5, 2.0, size=(3, 4))]),
        "clip": (lambda a: clip(a, -0.5, 0.5), [_away_from_zero(rng, 3, 4) * 0.4]),
        "matmul": (lambda a, b: matmul(a, b), [_normal(rng, 2, 3, 4), _normal(rng, 4, 5)]),
        "conv2d": (
            lambda x, w, b: sigmoid(conv2d(x, w, b, stride=1, padding=1)),
            [_normal(rng, 2, 2, 5, 5), _normal(rng, 3, 2, 3, 3) * 0.3, _normal(rng, 3)],
        ),
        "conv2d_strided_dilated": (
            lambda x, w: conv2d(x, w, stride=2, padding=2, dilation=2),
            [_normal(rng, 1, 2, 7, 7), _normal(rng, 2, 2, 3, 3)],
        ),
        "conv_transpose2d": (
            lambda x, w, b: conv_transpose2d(x, w, b, stride=2, padding=1),
            [_normal(rng, 1, 2, 3, 3), _normal(rng, 2, 3, 4, 4), _normal(rng, 3)],
        ),
        "max_pool2d": (lambda x: pool2d("max", x, 2), [_distinct(rng, 1, 2, 4, 4)]),
        "avg_pool2d": (lambda x: pool2d("avg", x, 3, stride=2, padding=1), [_normal(rng, 1, 2, 5, 5)]),
        "global_avg_pool": (lambda x: global_avg_pool(x), [_normal(rng, 2, 3, 3, 3)]),
        "upsample_bilinear": (lambda x: upsample_bilinear(x, 5, 7), [_normal(rng, 1, 2, 3, 4)]),
        "relu": (lambda x: relu(x), [_away_from_zero(rng, 3, 4)]),
        "leaky_relu": (lambda x: leaky_relu(x, 0.2), [_away_from_zero(rng, 3, 4)]),
        "sigmoid": (lambda x: sigmoid(x), [_normal(rng, 3, 4)]),
        "tanh": (lambda x: tanh(x), [_normal(rng, 3, 4)]),
        "softmax": (lambda x: softmax(x, axis=-1), [_normal(rng, 3, 5)]),
        "batchnorm2d": (
            lambda x, s, b: batchnorm2d(x, s, b, None, None, training=True),
            [_normal(rng, 3, 2, 3, 3), rng.uniform(0.5, 1.5, size=2), _normal(rng, 2)],
        ),
        "layernorm": (
            lambda x, s, b: layernorm(x, s, b),
            [_normal(rng, 2, 3, 6), rng.uniform(0.5, 1.5, size=6), _normal(rng, 6)],
        ),
        "sum_mean": (lambda x: sum_(x, axis=1) + mean(x, axis=1), [_normal(rng, 2, 3, 4)]),
        "concat": (lambda a, b: concat([a, b], axis=1), [_normal(rng, 1, 2, 2, 2), _normal(rng, 1, 3, 2, 2)]),
        "reshape_permute": (lambda x: permute(reshape(x, (3, 2, 4)), (2, 0, 1)), [_normal(rng, 2, 3, 4)]),
        "slice": (lambda x: slice_(x, (slice(None), slice(1, 3))), [_normal(rng, 2, 4)]),
        "pad2d_replicate": (lambda x: pad2d(x, (1, 2, 2, 1), mode="replicate"), [_normal(rng, 1, 1, 3, 3)]),
        "bce_loss": (lambda p: bce_loss(p, target), [_probabilities(rng, 2, 3, 4, 4)]),
        "dice_loss": (lambda p: dice_loss(p, target), [_probabilities(rng, 2, 3, 4, 4)]),
        "seg_loss": (lambda p: seg_loss(p, target), [_probabilities(rng, 2, 3, 4, 4)]),
        "discriminator_loss": (
            lambda real, fake: discriminator_loss(real, fake),
            [_normal(rng, 2, 1, 3, 3), _normal(rng, 2, 1, 3, 3)],
        ),
        "generator_loss": (lambda fake: generator_loss(fake), [_normal(rng, 2, 1, 3, 3)]),
    }


def op_names() -> List[str]:
    return list(_cases(make_rng(0, "gradcheck-suite")).keys())


def run_gradcheck_suite(
    seeds: Sequence[int] = DEFAULT_SEEDS,
    tol: float = DEFAULT_TOLERANCE,
    ops: Sequence[str] = (),
) -> List[GradCheckResult]:
    """grad_check every op (or the named subset) at every seed, in 64-bit"""
    results: List[GradCheckResult] = []
    for seed in seeds:
        cases = _cases(make_rng(seed, "gradcheck-suite"))
        unknown = set(ops) - set(cases)
        if unknown:
            raise ConfigError(f"unknown ops: {sorted(unknown)}")
        for name, (fn, inputs) in cases.items():
            if ops and name not in ops:
                continue
            error = grad_check(fn, inputs, dtype=np.float64, seed=seed)
            passed = bool(error < tol)
            results.append(GradCheckResult(op=name, seed=seed, max_rel_error=float(error), passed=passed))
            level = logging.INFO if passed else logging.ERROR
            logger.log(level, f"gradcheck {name} seed {seed}: max relative error {error:.2e}")
    return results


def assert_gradcheck(results: Sequence[GradCheckResult]) -> None:
    failed = [r for r in results if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.max_rel_error)
        raise GradCheckError(
            f"{len(failed)} gradient checks exceeded tolerance; worst {worst.op} (seed {worst.seed}): {worst.max_rel_error:.2e}"
        )
