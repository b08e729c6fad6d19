"""
Stage services on 32x32 phantoms with a two-step budget
"""
import math

import numpy as np
import pytest

from ribforge.core.errors import ConfigError, IntegrityError, NonFiniteLossError, ShapeError
from ribforge.data.types import MaskSet
from ribforge.models import load_weights, weights_digest
from ribforge.schemas.configs import AffineRanges, ChannelGroups, GeneratorConfig
from ribforge.services import (
    GuidanceService,
    ablation_augmentation,
    ablation_modules,
    ablation_synthetic_volume,
    evaluate_model,
    synthesize_pairs,
    train_guidance,
    train_mtunet,
    train_sdgan,
    write_stage_artifacts,
)
from ribforge.services.training import StepBudget, check_finite, epoch_batches, to_image_range, to_network_range
from ribforge.utils.helpers import read_json


@pytest.fixture(scope="module")
def guidance_run(small_dataset, stage_cfg):
    return train_guidance(small_dataset, stage_cfg("guidance"), small_dataset)


@pytest.fixture(scope="module")
def sdgan_cfg(stage_cfg):
    return stage_cfg("sdgan")


@pytest.fixture(scope="module")
def sdgan_run(small_dataset, guidance_run, sdgan_cfg):
    return train_sdgan(small_dataset, guidance_run[0], sdgan_cfg)


@pytest.fixture(scope="module")
def synthetic(sdgan_run, small_dataset, sdgan_cfg):
    return synthesize_pairs(sdgan_run[0], small_dataset.masksets(), 4, seed=1,
                            ranges=AffineRanges(), gen_cfg=sdgan_cfg.generator)


def test_range_conversions():
    images = np.array([0.0, 0.25, 1.0])
    np.testing.assert_allclose(to_network_range(images), [-1.0, -0.5, 1.0])
    np.testing.assert_allclose(to_image_range(to_network_range(images)), images)
    np.testing.assert_allclose(to_image_range(np.array([-2.0, 2.0])), [0.0, 1.0])


def test_epoch_batches_cover_every_index():
    batches = list(epoch_batches(7, 3, seed=0, epoch=2, stage="guidance"))
    assert [len(b) for b in batches] == [3, 3, 1]
    assert sorted(np.concatenate(batches).tolist()) == list(range(7))
    again = list(epoch_batches(7, 3, seed=0, epoch=2, stage="guidance"))
    assert all(np.array_equal(a, b) for a, b in zip(batches, again))


def test_check_finite_and_step_budget():
    assert check_finite(0.5, "guidance", 0, 0, "bce") == 0.5
    with pytest.raises(NonFiniteLossError, match="epoch 3, batch 1"):
        check_finite(math.nan, "guidance", 3, 1, "bce")
    budget = StepBudget(2)
    budget.take()
    assert not budget.exhausted
    budget.take()
    assert budget.exhausted
    assert not StepBudget(None).exhausted


def test_guidance_report(guidance_run):
    weights, report = guidance_run
    assert report.stage == "guidance"
    assert set(report.losses) == {"train_bce", "val_bce"}
    assert len(report.losses["train_bce"]) == 1
    assert report.selected_epoch == 0
    assert report.weight_digest == weights_digest(weights)
    assert report.config["max_steps"] == 2


def test_guidance_training_is_deterministic(small_dataset, stage_cfg, guidance_run):
    weights, report = train_guidance(small_dataset, stage_cfg("guidance"), small_dataset)
    assert report.weight_digest == guidance_run[1].weight_digest
    assert report.losses == guidance_run[1].losses


def test_service_rejects_other_stage(stage_cfg):
    with pytest.raises(ConfigError):
        GuidanceService(stage_cfg("mtunet"))


def test_sdgan_keeps_guidance_frozen(sdgan_run, guidance_run):
    gen_weights, disc_weights, report = sdgan_run
    assert report.weight_digests["guidance"] == weights_digest(guidance_run[0])
    assert report.weight_digests["generator"] == weights_digest(gen_weights)
    assert report.weight_digests["discriminator"] == weights_digest(disc_weights)
    assert set(report.losses) == {"d_loss", "g_loss", "seg_loss"}
    assert all(len(series) == 1 for series in report.losses.values())
    assert report.eval is not None
    assert set(report.eval.groups) == {"ribs", "lungs", "clavicles"}


def test_sdgan_needs_guidance_weights(small_dataset, sdgan_cfg):
    with pytest.raises(ConfigError, match="guidance"):
        train_sdgan(small_dataset, None, sdgan_cfg)


def test_synthesis(synthetic, sdgan_run, small_dataset, sdgan_cfg):
    assert len(synthetic) == 4
    assert [s.sample_id for s in synthetic] == [f"synthetic_{i:05d}" for i in range(4)]
    assert all(s.provenance == "synthetic" for s in synthetic)
    for s in synthetic:
        assert s.image.shape == (1, 32, 32)
        # images are stored at 8-bit precision
        np.testing.assert_allclose(s.image * 255, np.rint(s.image * 255), atol=1e-3)

    again = synthesize_pairs(sdgan_run[0], small_dataset.masksets(), 4, seed=1,
                             ranges=AffineRanges(), gen_cfg=sdgan_cfg.generator)
    for a, b in zip(synthetic, again):
        assert a.image.tobytes() == b.image.tobytes()
        assert a.masks.equals(b.masks)


def test_synthesis_rejects_bad_requests(sdgan_run, small_dataset, sdgan_cfg):
    with pytest.raises(ConfigError):
        synthesize_pairs(sdgan_run[0], small_dataset.masksets(), 0, 0, AffineRanges(), sdgan_cfg.generator)
    with pytest.raises(ConfigError):
        synthesize_pairs(sdgan_run[0], [], 2, 0, AffineRanges(), sdgan_cfg.generator)
    odd = MaskSet(np.zeros((10, 32, 32)), np.zeros((2, 32, 32)), np.zeros((2, 32, 32)))
    with pytest.raises(ShapeError):
        synthesize_pairs(sdgan_run[0], [odd], 2, 0, AffineRanges(), sdgan_cfg.generator)


def test_mtunet_on_real_and_synthetic(small_dataset, synthetic, stage_cfg):
    weights, report = train_mtunet(small_dataset, synthetic, stage_cfg("mtunet"), small_dataset)
    assert report.stage == "mtunet"
    assert len(report.losses["train_seg"]) == len(report.losses["val_miou"]) == 1
    # checkpoints are ranked by mIOU averaged over all three groups
    assert report.losses["val_miou"][0] == pytest.approx(report.eval.mean_miou())
    assert report.selected_epoch == 0
    assert report.eval.n_samples == len(small_dataset)
    assert 0.0 <= report.eval.miou("ribs") <= 1.0
    assert report.weight_digests["mtunet"] == weights_digest(weights)


def test_mtunet_needs_data(stage_cfg):
    with pytest.raises(ConfigError):
        train_mtunet(None, None, stage_cfg("mtunet"))


def test_oracle_evaluation_is_perfect(small_dataset, stage_cfg):
    table = evaluate_model(None, small_dataset, stage_cfg("mtunet"), oracle=True)
    for score in table.groups.values():
        assert score.miou == 1.0
        assert score.mdsc == 1.0


def test_evaluation_rejects_foreign_grouping(small_dataset, stage_cfg):
    cfg = stage_cfg("mtunet", mtunet={"groups": ChannelGroups(ribs=24).model_dump()})
    with pytest.raises(ConfigError):
        evaluate_model(None, small_dataset, cfg, oracle=True)


def test_module_ablation_has_four_rows(small_dataset, sdgan_run, sdgan_cfg, stage_cfg):
    rows = ablation_modules(small_dataset, stage_cfg("mtunet"), sdgan_run[0], sdgan_cfg.generator,
                            multiplier=1, test_ds=small_dataset)
    assert [r.label for r in rows] == ["baseline", "baseline + aspp", "baseline + sd-gan", "baseline + sd-gan + aspp"]
    assert [r.n_synthetic for r in rows] == [0, 0, 6, 6]
    assert all(r.n_real == 6 for r in rows)


def test_module_ablation_needs_generator_for_synthetic_rows(small_dataset, stage_cfg):
    with pytest.raises(ConfigError):
        ablation_modules(small_dataset, stage_cfg("mtunet"), None, GeneratorConfig())


def test_stage_artifacts(tmp_path, guidance_run):
    weights, report = guidance_run
    paths = write_stage_artifacts(tmp_path, {"guidance": weights}, report)
    assert paths["guidance"].name == "guidance.sdgw"
    assert load_weights(paths["guidance"]).equals(weights)
    saved = read_json(tmp_path / "report.json")
    assert saved["weight_digest"] == report.weight_digest
    assert "elapsed_s" not in saved
    assert read_json(tmp_path / "timing.json") == {"stage": "guidance", "elapsed_s": report.elapsed_s}

    tampered = report.model_copy(update={"weight_digests": {"guidance": "0" * 64}})
    with pytest.raises(IntegrityError):
        write_stage_artifacts(tmp_path / "again", {"guidance": weights}, tampered)


def test_augmentation_ablation_at_equal_volume(small_dataset, sdgan_run, sdgan_cfg, stage_cfg):
    rows = ablation_augmentation(small_dataset, sdgan_run[0], stage_cfg("mtunet"), sdgan_cfg.generator,
                                 multiplier=1, test_ds=small_dataset)
    assert [r.label for r in rows] == ["none", "traditional", "sd-gan"]
    assert [r.n_synthetic for r in rows] == [0, 6, 6]
    assert all(r.flags["multiplier"] == 1 for r in rows)


def test_volume_ablation(small_dataset, sdgan_run, sdgan_cfg, stage_cfg):
    rows = ablation_synthetic_volume(small_dataset, sdgan_run[0], [0, 1], stage_cfg("mtunet"),
                                     sdgan_cfg.generator, test_ds=small_dataset)
    assert [r.label for r in rows] == ["real+0x", "real+1x"]
    assert [r.n_synthetic for r in rows] == [0, 6]
    with pytest.raises(ConfigError):
        ablation_synthetic_volume(small_dataset, sdgan_run[0], [-1], stage_cfg("mtunet"), sdgan_cfg.generator)
    with pytest.raises(ConfigError):
        ablation_synthetic_volume(small_dataset, sdgan_run[0], [], stage_cfg("mtunet"), sdgan_cfg.generator)
