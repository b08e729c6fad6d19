import numpy as np
import pytest
from pydantic import ValidationError

from ribforge.core.errors import ConfigError
from ribforge.core.rng import make_rng
from ribforge.data.affine import (
    affine_transform_maskset,
    affine_transform_sample,
    round_robin_order,
    sample_affine_params,
    traditional_augment,
    warp_nearest,
)
from ribforge.data.types import AffineParams
from ribforge.schemas.configs import AffineRanges


def test_identity_leaves_masks_unchanged(small_dataset):
    masks = small_dataset[0].masks
    out = affine_transform_maskset(masks, AffineParams())
    assert out.equals(masks)
    assert out.ribs is not masks.ribs


def test_double_flip_is_identity(rng):
    channels = (rng.random((3, 9, 12)) < 0.3).astype(np.uint8)
    flip = AffineParams(hflip=True)
    once = warp_nearest(channels, flip)
    np.testing.assert_array_equal(once, channels[:, :, ::-1])
    np.testing.assert_array_equal(warp_nearest(once, flip), channels)


def test_quarter_turn_maps_pixels_counter_clockwise():
    src = np.zeros((1, 9, 9), dtype=np.uint8)
    src[0, 2, 6] = 1
    out = warp_nearest(src, AffineParams(rotation_deg=90.0))
    assert out.sum() == 1
    assert out[0, 2, 2] == 1


def test_translation_shifts_and_zero_fills():
    src = np.zeros((1, 10, 10), dtype=np.uint8)
    src[0, 5, 5] = 1
    src[0, :, 9] = 1
    out = warp_nearest(src, AffineParams(translate_frac=(0.2, -0.1)))
    assert out[0, 4, 7] == 1
    # the right-most column leaves the frame
    assert out.sum() == 1


def test_transformed_masks_stay_binary(small_dataset):
    params = AffineParams(rotation_deg=7.0, translate_frac=(0.03, -0.02), scale=1.08, hflip=True)
    out = affine_transform_maskset(small_dataset[1].masks, params)
    assert set(np.unique(out.stack())) <= {0, 1}
    assert out.groups == small_dataset[1].masks.groups


def test_sample_transform_marks_provenance(small_dataset):
    params = AffineParams(rotation_deg=-5.0, scale=0.95)
    out = affine_transform_sample(small_dataset[2], params, seed=11)
    assert out.provenance == "synthetic"
    assert out.seed == 11
    assert out.image.shape == small_dataset[2].image.shape
    assert 0.0 <= out.image.min() and out.image.max() <= 1.0


def test_sampled_params_respect_ranges():
    ranges = AffineRanges()
    rng = make_rng(0, "affine-test")
    draws = [sample_affine_params(rng, ranges) for _ in range(10_000)]
    assert all(-10 <= p.rotation_deg <= 10 for p in draws)
    assert all(-0.05 <= d <= 0.05 for p in draws for d in p.translate_frac)
    assert all(0.9 <= p.scale <= 1.1 for p in draws)
    flips = sum(p.hflip for p in draws) / len(draws)
    assert 0.45 <= flips <= 0.55


def test_degenerate_ranges_give_identity():
    rng = make_rng(1)
    assert sample_affine_params(rng, AffineRanges.identity()).is_identity


def test_invalid_ranges():
    with pytest.raises(ValidationError):
        AffineRanges(rotation_deg=(5.0, -5.0))
    with pytest.raises(ValidationError):
        AffineRanges(scale=(0.0, 1.0))
    with pytest.raises(ConfigError):
        AffineParams(scale=0.0)


def test_round_robin_visits_every_source():
    order = round_robin_order(4, 10, seed=3)
    assert len(order) == 10
    assert set(order[:4]) == {0, 1, 2, 3}
    assert order[4:8] == order[:4]
    with pytest.raises(ConfigError):
        round_robin_order(0, 3, seed=0)


def test_traditional_augment(small_dataset):
    ranges = AffineRanges()
    out = traditional_augment(small_dataset.samples[:3], 5, seed=2, ranges=ranges)
    assert [s.sample_id for s in out] == [f"augmented_{i:05d}" for i in range(5)]
    assert all(s.provenance == "synthetic" for s in out)
    again = traditional_augment(small_dataset.samples[:3], 5, seed=2, ranges=ranges)
    for a, b in zip(out, again):
        assert a.image.tobytes() == b.image.tobytes()
        assert a.masks.equals(b.masks)
    with pytest.raises(ConfigError):
        traditional_augment(small_dataset.samples, 0, seed=0, ranges=ranges)
