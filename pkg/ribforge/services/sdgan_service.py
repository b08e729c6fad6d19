"""
Stage 2: adversarial training of the mask-to-image generator under a frozen
semantics-guidance network
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from ribforge.core.errors import ConfigError, FreezeViolationError
from ribforge.core.rng import make_rng
from ribforge.data.types import PhantomDataset
from ribforge.metrics.evaluation import evaluate_dataset
from ribforge.models import (
    Generator,
    GuidanceUNet,
    ModelWeights,
    PatchDiscriminator,
    load_module_weights,
    module_weights,
    weights_digest,
)
from ribforge.nn import discriminator_loss, generator_loss, lr_at, seg_loss
from ribforge.schemas.configs import StageConfig
from ribforge.schemas.reports import EvalTable, TrainReport
from ribforge.tensor import Tensor, backward, no_grad
from ribforge.utils.logger import log_duration
from .guidance_service import build_guidance
from .training import PREDICT_BATCH, StepBudget, build_optimizer, check_finite, epoch_batches, to_network_range

logger = logging.getLogger(__name__)


def build_generator(cfg: StageConfig, weights: Optional[ModelWeights] = None) -> Generator:
    model = Generator(cfg.generator, make_rng(cfg.seed, "init", "generator"))
    if weights is not None:
        load_module_weights(model, weights)
    return model


def build_discriminator(cfg: StageConfig) -> PatchDiscriminator:
    return PatchDiscriminator(cfg.discriminator, make_rng(cfg.seed, "init", "discriminator"))


def evaluate_semantic_consistency(
    generator: Generator,
    guidance: GuidanceUNet,
    masks: np.ndarray,
    threshold: float = 0.5,
    batch_size: int = PREDICT_BATCH,
) -> EvalTable:
    """Score the guidance network's segmentation of G(masks) against the masks"""
    modes = generator.training, guidance.training
    generator.eval()
    guidance.eval()
    probs = []
    try:
        with no_grad():
            for start in range(0, len(masks), batch_size):
                fake = generator(masks[start:start + batch_size])
                probs.append(guidance(fake).data)
    finally:
        generator.train(modes[0])
        guidance.train(modes[1])
    return evaluate_dataset(np.concatenate(probs), masks, generator.cfg.groups, threshold)


class SDGANService:
    """One D-step then one G-step per batch; guidance stays frozen throughout"""

    def __init__(self, cfg: StageConfig):
        if cfg.stage != "sdgan":
            raise ConfigError(f"SDGANService needs an sdgan stage config, got '{cfg.stage}'")
        if cfg.generator.groups != cfg.guidance.groups:
            raise ConfigError("generator and guidance channel groupings differ")
        self.cfg = cfg

    def _lr_factor(self, epoch: int) -> float:
        base = self.cfg.schedule.base_lr
        return lr_at(self.cfg.schedule, epoch) / base if base > 0 else 0.0

    def train(
        self,
        dataset: PhantomDataset,
        guidance_weights: Optional[ModelWeights],
    ) -> Tuple[ModelWeights, ModelWeights, TrainReport]:
        cfg = self.cfg
        if guidance_weights is None:
            raise ConfigError("sdgan training needs guidance weights (--guidance-weights)")
        if len(dataset) == 0:
            raise ConfigError("sdgan training needs a non-empty dataset")
        gan_weight = cfg.loss_weights.get("gan", 1.0)
        seg_weight = cfg.loss_weights.get("seg", 1.0)

        with log_duration("sdgan training", logger) as timing:
            try:
                guidance = build_guidance(cfg, guidance_weights).freeze()
                guidance_digest = weights_digest(module_weights(guidance))
                generator = build_generator(cfg)
                discriminator = build_discriminator(cfg)
                opt_g = build_optimizer(generator.parameters(), cfg.optimizer)
                opt_d = build_optimizer(discriminator.parameters(), cfg.discriminator_optimizer)

                images = to_network_range(dataset.images())
                masks = dataset.masks()
                losses = {"d_loss": [], "g_loss": [], "seg_loss": []}
                budget = StepBudget(cfg.max_steps)

                for epoch in range(cfg.epochs):
                    if budget.exhausted:
                        break
                    factor = self._lr_factor(epoch)
                    opt_g.lr = cfg.optimizer.lr * factor
                    opt_d.lr = cfg.discriminator_optimizer.lr * factor
                    generator.train()
                    discriminator.train()
                    sums = {name: [] for name in losses}
                    count = 0
                    for b, idx in enumerate(epoch_batches(len(dataset), cfg.batch_size, cfg.seed, epoch, "sdgan")):
                        real = Tensor(images[idx])
                        batch_masks = masks[idx]
                        fake = generator(batch_masks)

                        # D-step on the detached fake
                        d_loss = discriminator_loss(discriminator(real), discriminator(fake.detach()))
                        d_value = check_finite(d_loss.item(), "sdgan", epoch, b, "d_loss")
                        opt_d.zero_grad()
                        backward(d_loss)
                        opt_d.step()

                        # G-step through a discriminator that takes no gradient
                        discriminator.set_requires_grad(False)
                        try:
                            g_loss = generator_loss(discriminator(fake))
                            s_loss = seg_loss(guidance(fake), batch_masks)
                            total = gan_weight * g_loss + seg_weight * s_loss
                            g_value = check_finite(g_loss.item(), "sdgan", epoch, b, "g_loss")
                            s_value = check_finite(s_loss.item(), "sdgan", epoch, b, "seg_loss")
                            opt_g.zero_grad()
                            backward(total)
                            opt_g.step()
                        finally:
                            discriminator.set_requires_grad(True)
                        budget.take()

                        n = len(idx)
                        sums["d_loss"].append(d_value * n)
                        sums["g_loss"].append(g_value * n)
                        sums["seg_loss"].append(s_value * n)
                        count += n
                        logger.debug(
                            f"sdgan epoch {epoch} batch {b}: d {d_value:.4f} g {g_value:.4f} seg {s_value:.4f}"
                        )
                        if budget.exhausted:
                            break
                    for name in losses:
                        losses[name].append(math.fsum(sums[name]) / count)
                    logger.info(
                        f"sdgan epoch {epoch + 1}/{cfg.epochs}: d {losses['d_loss'][-1]:.4f}, "
                        f"g {losses['g_loss'][-1]:.4f}, seg {losses['seg_loss'][-1]:.4f}"
                    )

                after = weights_digest(module_weights(guidance))
                if after != guidance_digest:
                    raise FreezeViolationError(f"guidance weights changed during sdgan training ({guidance_digest[:12]} -> {after[:12]})")
                consistency = evaluate_semantic_consistency(generator, guidance, masks, cfg.threshold)
                logger.info(
                    f"sdgan: guidance on generated images, ribs mDSC {consistency.mdsc('ribs'):.4f}, "
                    f"lungs mDSC {consistency.mdsc('lungs'):.4f}"
                )
                gen_weights = module_weights(generator)
                disc_weights = module_weights(discriminator)
            except Exception as e:
                logger.error(f"SD-GAN training failed: {e}")
                raise

        gen_digest = weights_digest(gen_weights)
        report = TrainReport(
            stage="sdgan",
            config=cfg.model_dump(mode="json"),
            losses=losses,
            eval=consistency,
            weight_digest=gen_digest,
            weight_digests={
                "generator": gen_digest,
                "discriminator": weights_digest(disc_weights),
                "guidance": guidance_digest,
            },
            selected_epoch=len(losses["d_loss"]) - 1,
            elapsed_s=timing["elapsed_s"],
        )
        return gen_weights, disc_weights, report


def train_sdgan(
    dataset: PhantomDataset,
    guidance_weights: Optional[ModelWeights],
    cfg: StageConfig,
) -> Tuple[ModelWeights, ModelWeights, TrainReport]:
    return SDGANService(cfg).train(dataset, guidance_weights)
