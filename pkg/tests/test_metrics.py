import numpy as np
import pytest

from ribforge.core.errors import ShapeError
from ribforge.metrics import binarize, dice, evaluate_dataset, iou
from ribforge.schemas.configs import ChannelGroups


def _bits(value: int) -> np.ndarray:
    return np.array([(value >> k) & 1 for k in range(9)], dtype=np.uint8).reshape(3, 3)


def test_exhaustive_three_by_three_oracle():
    masks = [_bits(v) for v in range(512)]
    for a in range(512):
        for b in range(512):
            inter = bin(a & b).count("1")
            union = bin(a | b).count("1")
            total = bin(a).count("1") + bin(b).count("1")
            expected_iou = 1.0 if union == 0 else inter / union
            expected_dice = 1.0 if total == 0 else 2 * inter / total
            assert iou(masks[a], masks[b]) == expected_iou
            assert dice(masks[a], masks[b]) == expected_dice


def test_dice_is_a_function_of_iou():
    rng = np.random.default_rng(99)
    for _ in range(10_000):
        density = rng.uniform(0.0, 0.6)
        p = rng.random((16, 16)) < density
        g = rng.random((16, 16)) < density
        j = iou(p, g)
        assert abs(dice(p, g) - 2 * j / (1 + j)) <= 1e-12


def test_both_empty_scores_one():
    empty = np.zeros((4, 4), dtype=np.uint8)
    assert iou(empty, empty) == 1.0
    assert dice(empty, empty) == 1.0
    full = np.ones((4, 4), dtype=np.uint8)
    assert iou(empty, full) == 0.0
    assert dice(full, empty) == 0.0


def test_binarize_threshold_is_inclusive():
    np.testing.assert_array_equal(binarize(np.array([0.49, 0.5, 0.51]), 0.5), [0, 1, 1])
    np.testing.assert_array_equal(binarize(np.array([0.2, 0.3]), 0.3), [0, 1])


def test_mismatched_masks():
    with pytest.raises(ShapeError):
        iou(np.zeros((2, 2)), np.zeros((3, 3)))


def test_group_table_averages_channels():
    groups = ChannelGroups()
    gt = np.zeros((2, 16, 4, 4))
    gt[:, :12, :2, :2] = 1.0
    gt[:, 12:14, 0, 0] = 1.0
    out = gt.copy()
    out[:, :12] *= 0.9
    out[:, 12:14] = 0.0
    # one of the twelve rib channels misses half its pixels in the first sample
    out[0, 3, 0, :] = 0.0

    table = evaluate_dataset(out, gt, groups)
    assert table.n_samples == 2
    assert [c.channel for c in table.per_channel][:3] == ["rib_00", "rib_01", "rib_02"]
    assert table.per_channel[3].iou == pytest.approx(0.75)
    assert table.per_channel[3].dice == pytest.approx((2 / 3 + 1) / 2)
    assert table.miou("ribs") == pytest.approx((11 + 0.75) / 12)
    assert table.miou("lungs") == 0.0
    assert table.mdsc("lungs") == 0.0
    assert table.miou("clavicles") == 1.0
    assert table.mdsc("clavicles") == 1.0
    assert table.mean_miou() == pytest.approx(((11 + 0.75) / 12 + 0.0 + 1.0) / 3)


def test_evaluation_is_order_independent(rng):
    groups = ChannelGroups()
    out = rng.random((5, 16, 8, 8))
    gt = (rng.random((5, 16, 8, 8)) < 0.3).astype(np.float64)
    order = rng.permutation(5)
    a = evaluate_dataset(out, gt, groups)
    b = evaluate_dataset(out[order], gt[order], groups)
    assert a.groups == b.groups


def test_evaluation_shape_errors():
    groups = ChannelGroups()
    with pytest.raises(ShapeError):
        evaluate_dataset(np.zeros((1, 16, 4, 4)), np.zeros((1, 16, 4, 5)), groups)
    with pytest.raises(ShapeError):
        evaluate_dataset(np.zeros((1, 15, 4, 4)), np.zeros((1, 15, 4, 4)), groups)
    with pytest.raises(ShapeError):
        evaluate_dataset(np.zeros((0, 16, 4, 4)), np.zeros((0, 16, 4, 4)), groups)
