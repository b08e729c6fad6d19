"""
Desk-scale training trends; each runs for minutes, so all are marked slow
"""
import statistics

import pytest

from ribforge.presets import resolve_stage_config
from ribforge.services import (
    ablation_modules,
    ablation_synthetic_volume,
    generate_dataset,
    generate_splits,
    train_guidance,
    train_mtunet,
    train_sdgan,
)
from ribforge.services.mtunet_service import build_mtunet, score_model

SEEDS = (0, 1, 2)

pytestmark = pytest.mark.slow


def _trained_generator(seed: int, n: int = 200):
    guidance_cfg = resolve_stage_config("guidance", "desk", seed=seed)
    data = generate_dataset(n, seed=seed, cfg=guidance_cfg.phantom)
    guidance_w, _ = train_guidance(data, guidance_cfg)
    sdgan_cfg = resolve_stage_config("sdgan", "desk", seed=seed)
    gen_w, _, report = train_sdgan(data, guidance_w, sdgan_cfg)
    return gen_w, sdgan_cfg, report


def test_mtunet_overfits_four_samples():
    scores = []
    for seed in SEEDS:
        cfg = resolve_stage_config("mtunet", "desk", {"epochs": 200, "max_steps": 200}, seed=seed)
        data = generate_dataset(4, seed=seed, cfg=cfg.phantom)
        weights, _ = train_mtunet(data, None, cfg)
        scores.append(score_model(build_mtunet(cfg, weights), data).mean_mdsc())
    assert statistics.median(scores) >= 0.95


def test_guidance_agrees_with_generated_images():
    mdsc, improved = [], []
    for seed in SEEDS:
        _, _, report = _trained_generator(seed)
        mdsc.append(report.eval.mean_mdsc())
        seg = report.losses["seg_loss"]
        improved.append(statistics.median(seg[-5:]) < statistics.median(seg[:5]))
    assert statistics.median(mdsc) >= 0.60
    assert sum(improved) >= 2


def test_synthetic_volume_helps():
    gains = []
    for seed in SEEDS:
        gen_w, sdgan_cfg, _ = _trained_generator(seed)
        cfg = resolve_stage_config("mtunet", "desk", seed=seed)
        splits = generate_splits(84, seed=seed, cfg=cfg.phantom)
        real = splits["train"]
        rows = ablation_synthetic_volume(
            real, gen_w, [0, 4], cfg, sdgan_cfg.generator, synthesis_seed=seed,
            val_ds=splits["val"], test_ds=splits["test"],
        )
        gains.append(rows[1].eval.miou("ribs") - rows[0].eval.miou("ribs"))
    assert statistics.median(gains) > 0


def test_full_model_beats_baseline():
    gains = []
    for seed in SEEDS:
        gen_w, sdgan_cfg, _ = _trained_generator(seed)
        cfg = resolve_stage_config("mtunet", "desk", seed=seed)
        splits = generate_splits(40, seed=seed, cfg=cfg.phantom)
        rows = {r.label: r for r in ablation_modules(
            splits["train"], cfg, gen_w, sdgan_cfg.generator, synthesis_seed=seed,
            val_ds=splits["val"], test_ds=splits["test"],
        )}
        gains.append(rows["baseline + sd-gan + aspp"].eval.miou("ribs") - rows["baseline"].eval.miou("ribs"))
    assert statistics.median(gains) >= 0
