"""
Overlap metrics and per-group evaluation tables
"""
import math
from typing import Optional

import numpy as np

from ribforge.core.errors import ShapeError
from ribforge.schemas.configs import GROUP_NAMES, ChannelGroups
from ribforge.schemas.reports import ChannelScore, EvalTable, GroupScore

DEFAULT_THRESHOLD = 0.5


def binarize(probs: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """1 where probs >= threshold (inclusive), else 0"""
    return (np.asarray(probs) >= threshold).astype(np.uint8)


def _counts(pred_bin: np.ndarray, gt_bin: np.ndarray):
    pred = np.asarray(pred_bin).astype(bool)
    gt = np.asarray(gt_bin).astype(bool)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    inter = int(np.count_nonzero(pred & gt))
    return inter, int(np.count_nonzero(pred)), int(np.count_nonzero(gt))


def iou(pred_bin: np.ndarray, gt_bin: np.ndarray) -> float:
    """|P & G| / |P | G|; both empty -> 1.0"""
    inter, p, g = _counts(pred_bin, gt_bin)
    union = p + g - inter
    return 1.0 if union == 0 else inter / union


def dice(pred_bin: np.ndarray, gt_bin: np.ndarray) -> float:
    """2|P & G| / (|P| + |G|); both empty -> 1.0"""
    inter, p, g = _counts(pred_bin, gt_bin)
    return 1.0 if p + g == 0 else 2 * inter / (p + g)


def evaluate_dataset(
    outputs: np.ndarray,
    ground_truths: np.ndarray,
    grouping: ChannelGroups,
    threshold: float = DEFAULT_THRESHOLD,
    n_samples: Optional[int] = None,
) -> EvalTable:
    """Mean over samples per channel, then mean over channels per group

    ``outputs`` are probabilities (or hard masks) [N, C, H, W]. Means use
    exactly rounded summation, so the table does not depend on sample order.
    """
    outputs = np.asarray(outputs)
    truths = np.asarray(ground_truths)
    if outputs.shape != truths.shape:
        raise ShapeError(f"outputs {outputs.shape} and ground truths {truths.shape} differ")
    if outputs.ndim != 4 or outputs.shape[1] != grouping.total:
        raise ShapeError(f"outputs {outputs.shape} do not match grouping {grouping.counts()}")
    N = outputs.shape[0]
    if N == 0:
        raise ShapeError("no samples to evaluate")
    pred = binarize(outputs, threshold)
    gt = truths >= 0.5

    names = grouping.channel_names()
    slices = grouping.slices()
    group_of = {}
    for group in GROUP_NAMES:
        for c in range(slices[group].start, slices[group].stop):
            group_of[c] = group

    per_channel = []
    for c, name in enumerate(names):
        ious = [iou(pred[n, c], gt[n, c]) for n in range(N)]
        dices = [dice(pred[n, c], gt[n, c]) for n in range(N)]
        per_channel.append(ChannelScore(
            channel=name,
            group=group_of[c],
            iou=math.fsum(ious) / N,
            dice=math.fsum(dices) / N,
        ))

    groups = {}
    for group in GROUP_NAMES:
        members = per_channel[slices[group]]
        groups[group] = GroupScore(
            miou=math.fsum(m.iou for m in members) / len(members),
            mdsc=math.fsum(m.dice for m in members) / len(members),
        )
    return EvalTable(groups=groups, per_channel=per_channel, n_samples=N if n_samples is None else n_samples)
