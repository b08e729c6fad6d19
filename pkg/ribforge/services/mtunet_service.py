"""
Stage 4: MTUNet on real plus synthetic pairs
"""
import logging
import math
from typing import Optional, Tuple

from ribforge.core.errors import ConfigError
from ribforge.core.rng import make_rng
from ribforge.data.types import PhantomDataset
from ribforge.metrics.evaluation import evaluate_dataset
from ribforge.models import MTUNet, ModelWeights, load_module_weights, module_weights, weights_digest
from ribforge.nn import lr_at, seg_loss
from ribforge.schemas.configs import StageConfig
from ribforge.schemas.reports import EvalTable, TrainReport
from ribforge.tensor import Tensor, backward
from ribforge.utils.logger import log_duration
from .training import StepBudget, build_optimizer, check_finite, epoch_batches, predict, to_network_range

logger = logging.getLogger(__name__)


def build_mtunet(cfg: StageConfig, weights: Optional[ModelWeights] = None) -> MTUNet:
    model = MTUNet(cfg.mtunet, make_rng(cfg.seed, "init", "mtunet"))
    if weights is not None:
        load_module_weights(model, weights)
    return model


def score_model(model: MTUNet, dataset: PhantomDataset, threshold: float = 0.5) -> EvalTable:
    probs = predict(model, to_network_range(dataset.images()))
    return evaluate_dataset(probs, dataset.masks(), model.cfg.groups, threshold)


def combine_datasets(real_ds: Optional[PhantomDataset], synthetic_ds: Optional[PhantomDataset]) -> PhantomDataset:
    """Plain concatenation, real first; batches are drawn uniformly from the union"""
    parts = [ds for ds in (real_ds, synthetic_ds) if ds is not None and len(ds) > 0]
    if not parts:
        raise ConfigError("mtunet training needs a non-empty real or synthetic dataset")
    combined = parts[0]
    for extra in parts[1:]:
        combined = combined + extra
    return combined


class MTUNetService:
    """SGD-momentum training with per-epoch validation mIOU and best-checkpoint selection"""

    def __init__(self, cfg: StageConfig):
        if cfg.stage != "mtunet":
            raise ConfigError(f"MTUNetService needs an mtunet stage config, got '{cfg.stage}'")
        self.cfg = cfg

    def train(
        self,
        real_ds: Optional[PhantomDataset],
        synthetic_ds: Optional[PhantomDataset] = None,
        val_ds: Optional[PhantomDataset] = None,
    ) -> Tuple[ModelWeights, TrainReport]:
        """Returns the weights with the best validation mIOU averaged over ribs, lungs and clavicles

        Validation runs on epochs where ``epoch % eval_every == 0`` and on the
        last epoch; the ``val_miou`` series repeats the latest value between
        runs. Without a validation set the final epoch is kept.
        """
        cfg = self.cfg
        dataset = combine_datasets(real_ds, synthetic_ds)
        if dataset.groups != cfg.mtunet.groups:
            raise ConfigError(f"dataset channels {dataset.groups.counts()} != model channels {cfg.mtunet.groups.counts()}")
        n_real = len(real_ds) if real_ds is not None else 0
        logger.info(f"mtunet: training on {n_real} real + {len(dataset) - n_real} synthetic samples")

        with log_duration("mtunet training", logger) as timing:
            try:
                model = build_mtunet(cfg)
                optimizer = build_optimizer(model.parameters(), cfg.optimizer)
                images = to_network_range(dataset.images())
                masks = dataset.masks()
                has_val = val_ds is not None and len(val_ds) > 0

                losses = {"train_seg": []}
                if has_val:
                    losses["val_miou"] = []
                best_miou, best_epoch, best_weights, best_table = -math.inf, None, None, None
                budget = StepBudget(cfg.max_steps)

                for epoch in range(cfg.epochs):
                    if budget.exhausted:
                        break
                    optimizer.lr = lr_at(cfg.schedule, epoch)
                    model.train()
                    batch_losses, count = [], 0
                    for b, idx in enumerate(epoch_batches(len(dataset), cfg.batch_size, cfg.seed, epoch, "mtunet")):
                        loss = seg_loss(model(Tensor(images[idx])), masks[idx])
                        value = check_finite(loss.item(), "mtunet", epoch, b, "seg")
                        optimizer.zero_grad()
                        backward(loss)
                        optimizer.step()
                        budget.take()
                        batch_losses.append(value * len(idx))
                        count += len(idx)
                        if budget.exhausted:
                            break
                    train_loss = math.fsum(batch_losses) / count
                    losses["train_seg"].append(train_loss)

                    if not has_val:
                        logger.info(f"mtunet epoch {epoch + 1}/{cfg.epochs}: train seg {train_loss:.4f}")
                        continue
                    last = epoch == cfg.epochs - 1 or budget.exhausted
                    if epoch % cfg.eval_every == 0 or last:
                        table = score_model(model, val_ds, cfg.threshold)
                        miou = table.mean_miou()
                        if miou > best_miou:
                            best_miou, best_epoch = miou, epoch
                            best_weights, best_table = module_weights(model), table
                    losses["val_miou"].append(table.mean_miou())
                    logger.info(
                        f"mtunet epoch {epoch + 1}/{cfg.epochs}: train seg {train_loss:.4f}, "
                        f"val mIOU {losses['val_miou'][-1]:.4f}"
                    )

                if best_weights is None:
                    best_weights, best_epoch = module_weights(model), len(losses["train_seg"]) - 1
                    best_table = score_model(model, dataset, cfg.threshold)
                logger.info(f"mtunet: selected epoch {best_epoch + 1}, mean mIOU {best_table.mean_miou():.4f}")
            except Exception as e:
                logger.error(f"MTUNet training failed: {e}")
                raise

        digest = weights_digest(best_weights)
        report = TrainReport(
            stage="mtunet",
            config=cfg.model_dump(mode="json"),
            losses=losses,
            eval=best_table,
            weight_digest=digest,
            weight_digests={"mtunet": digest},
            selected_epoch=best_epoch,
            elapsed_s=timing["elapsed_s"],
        )
        return best_weights, report


def train_mtunet(
    real_ds: Optional[PhantomDataset],
    synthetic_ds: Optional[PhantomDataset],
    cfg: StageConfig,
    val_ds: Optional[PhantomDataset] = None,
) -> Tuple[ModelWeights, TrainReport]:
    return MTUNetService(cfg).train(real_ds, synthetic_ds, val_ds)


def evaluate_model(
    weights: ModelWeights,
    test_ds: PhantomDataset,
    cfg: StageConfig,
    oracle: bool = False,
) -> EvalTable:
    """EvalTable of ``weights`` on ``test_ds``; ``oracle`` scores the ground truth against itself"""
    if len(test_ds) == 0:
        raise ConfigError("evaluation needs a non-empty dataset")
    if test_ds.groups != cfg.mtunet.groups:
        raise ConfigError(f"dataset channels {test_ds.groups.counts()} != model channels {cfg.mtunet.groups.counts()}")
    try:
        if oracle:
            outputs = test_ds.masks()
        else:
            model = build_mtunet(cfg, weights)
            outputs = predict(model, to_network_range(test_ds.images()))
        table = evaluate_dataset(outputs, test_ds.masks(), cfg.mtunet.groups, cfg.threshold)
    except Exception as e:
        logger.error(f"Evaluation failed: {e}")
        raise
    logger.info(
        "eval: " + ", ".join(f"{g} mIOU {s.miou:.4f} mDSC {s.mdsc:.4f}" for g, s in table.groups.items())
    )
    return table
