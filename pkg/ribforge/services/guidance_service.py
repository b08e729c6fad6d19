"""
Stage 1: train the semantics-guidance UNet with BCE
"""
import logging
import math
from typing import Optional, Tuple

from ribforge.core.errors import ConfigError
from ribforge.core.rng import make_rng
from ribforge.data.types import PhantomDataset
from ribforge.models import GuidanceUNet, ModelWeights, load_module_weights, module_weights, weights_digest
from ribforge.nn import bce_loss, lr_at
from ribforge.schemas.configs import StageConfig
from ribforge.schemas.reports import TrainReport
from ribforge.tensor import Tensor, backward
from ribforge.utils.logger import log_duration
from .training import StepBudget, build_optimizer, check_finite, epoch_batches, mean_loss, to_network_range

logger = logging.getLogger(__name__)


def build_guidance(cfg: StageConfig, weights: Optional[ModelWeights] = None) -> GuidanceUNet:
    model = GuidanceUNet(cfg.guidance, make_rng(cfg.seed, "init", "guidance"))
    if weights is not None:
        load_module_weights(model, weights)
    return model


class GuidanceService:
    """Trains the guidance segmenter on real phantoms"""

    def __init__(self, cfg: StageConfig):
        if cfg.stage != "guidance":
            raise ConfigError(f"GuidanceService needs a guidance stage config, got '{cfg.stage}'")
        self.cfg = cfg

    def train(self, dataset: PhantomDataset, val_dataset: Optional[PhantomDataset] = None) -> Tuple[ModelWeights, TrainReport]:
        cfg = self.cfg
        if len(dataset) == 0:
            raise ConfigError("guidance training needs a non-empty train split")
        with log_duration("guidance training", logger) as timing:
            try:
                model = build_guidance(cfg)
                optimizer = build_optimizer(model.parameters(), cfg.optimizer)
                images = to_network_range(dataset.images())
                masks = dataset.masks()
                has_val = val_dataset is not None and len(val_dataset) > 0
                if has_val:
                    val_images = to_network_range(val_dataset.images())
                    val_masks = val_dataset.masks()

                losses = {"train_bce": []}
                if has_val:
                    losses["val_bce"] = []
                best_loss, best_epoch, best_weights = math.inf, None, None
                budget = StepBudget(cfg.max_steps)

                for epoch in range(cfg.epochs):
                    if budget.exhausted:
                        break
                    optimizer.lr = lr_at(cfg.schedule, epoch)
                    model.train()
                    batch_losses, count = [], 0
                    for b, idx in enumerate(epoch_batches(len(dataset), cfg.batch_size, cfg.seed, epoch, "guidance")):
                        loss = bce_loss(model(Tensor(images[idx])), masks[idx])
                        value = check_finite(loss.item(), "guidance", epoch, b, "bce")
                        optimizer.zero_grad()
                        backward(loss)
                        optimizer.step()
                        budget.take()
                        batch_losses.append(value * len(idx))
                        count += len(idx)
                        logger.debug(f"guidance epoch {epoch} batch {b}: bce {value:.5f}")
                        if budget.exhausted:
                            break
                    train_loss = math.fsum(batch_losses) / count
                    losses["train_bce"].append(train_loss)

                    if has_val:
                        val_loss = check_finite(mean_loss(model, bce_loss, val_images, val_masks), "guidance", epoch, -1, "val_bce")
                        losses["val_bce"].append(val_loss)
                        if val_loss < best_loss:
                            best_loss, best_epoch, best_weights = val_loss, epoch, module_weights(model)
                        logger.info(f"guidance epoch {epoch + 1}/{cfg.epochs}: train bce {train_loss:.4f}, val bce {val_loss:.4f}")
                    else:
                        logger.info(f"guidance epoch {epoch + 1}/{cfg.epochs}: train bce {train_loss:.4f}")

                if best_weights is None:
                    best_weights, best_epoch = module_weights(model), len(losses["train_bce"]) - 1
                logger.info(f"guidance: selected epoch {best_epoch + 1}")
            except Exception as e:
                logger.error(f"Guidance training failed: {e}")
                raise

        digest = weights_digest(best_weights)
        report = TrainReport(
            stage="guidance",
            config=cfg.model_dump(mode="json"),
            losses=losses,
            weight_digest=digest,
            weight_digests={"guidance": digest},
            selected_epoch=best_epoch,
            elapsed_s=timing["elapsed_s"],
        )
        return best_weights, report


def train_guidance(dataset: PhantomDataset, cfg: StageConfig,
                   val_dataset: Optional[PhantomDataset] = None) -> Tuple[ModelWeights, TrainReport]:
    return GuidanceService(cfg).train(dataset, val_dataset)
