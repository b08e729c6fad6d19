"""
Ablation harnesses: synthetic data volume, module flags and augmentation kind
"""
import logging
from itertools import product
from typing import List, Optional, Sequence

from ribforge.core.errors import ConfigError
from ribforge.data.affine import traditional_augment
from ribforge.data.types import PhantomDataset
from ribforge.models import ModelWeights
from ribforge.schemas.configs import GeneratorConfig, StageConfig
from ribforge.schemas.reports import AblationRow
from .mtunet_service import evaluate_model, train_mtunet
from .synthesis_service import synthesize_pairs

logger = logging.getLogger(__name__)

AUGMENTATION_KINDS = ("none", "traditional", "sd-gan")


class AblationService:
    """Trains one MTUNet per row with shared seeds; only the varied factor changes"""

    def __init__(
        self,
        cfg: StageConfig,
        gen_cfg: Optional[GeneratorConfig] = None,
        synthesis_seed: int = 0,
        val_ds: Optional[PhantomDataset] = None,
        test_ds: Optional[PhantomDataset] = None,
    ):
        if cfg.stage != "mtunet":
            raise ConfigError(f"ablations train MTUNet, got a '{cfg.stage}' stage config")
        self.cfg = cfg
        self.gen_cfg = gen_cfg
        self.synthesis_seed = synthesis_seed
        self.val_ds = val_ds
        self.test_ds = test_ds

    def _synthesize(self, real_ds: PhantomDataset, gen_weights: Optional[ModelWeights], n_out: int) -> Optional[PhantomDataset]:
        if n_out == 0:
            return None
        if gen_weights is None or self.gen_cfg is None:
            raise ConfigError("synthetic rows need generator weights and the generator config")
        return synthesize_pairs(gen_weights, real_ds.masksets(), n_out, self.synthesis_seed, self.cfg.affine, self.gen_cfg)

    def _row(self, label: str, cfg: StageConfig, real_ds: PhantomDataset,
             synthetic_ds: Optional[PhantomDataset], flags: dict) -> AblationRow:
        logger.info(f"ablation row '{label}': {len(real_ds)} real, {len(synthetic_ds) if synthetic_ds else 0} synthetic")
        weights, _ = train_mtunet(real_ds, synthetic_ds, cfg, self.val_ds)
        eval_ds = self.test_ds if self.test_ds is not None else (self.val_ds if self.val_ds is not None else real_ds)
        table = evaluate_model(weights, eval_ds, cfg)
        return AblationRow(
            label=label,
            n_real=len(real_ds),
            n_synthetic=len(synthetic_ds) if synthetic_ds is not None else 0,
            flags=flags,
            eval=table,
        )

    def synthetic_volume(self, real_ds: PhantomDataset, gen_weights: Optional[ModelWeights],
                         multipliers: Sequence[int]) -> List[AblationRow]:
        if not multipliers:
            raise ConfigError("multipliers must not be empty")
        rows = []
        for m in multipliers:
            if m < 0:
                raise ConfigError(f"multiplier must be non-negative, got {m}")
            synthetic = self._synthesize(real_ds, gen_weights, m * len(real_ds))
            rows.append(self._row(f"real+{m}x", self.cfg, real_ds, synthetic, {"multiplier": m}))
        return rows

    def modules(self, real_ds: PhantomDataset, gen_weights: Optional[ModelWeights],
                multiplier: int = 1) -> List[AblationRow]:
        """Baseline (no ASPP, no synthetic data), +SD-GAN, +ASPP, +both"""
        rows = []
        synthetic = None
        for use_sdgan, use_aspp in product((False, True), repeat=2):
            if use_sdgan and synthetic is None:
                synthetic = self._synthesize(real_ds, gen_weights, multiplier * len(real_ds))
            cfg = self.cfg.model_copy(update={"mtunet": self.cfg.mtunet.model_copy(update={"use_aspp": use_aspp})})
            parts = ["baseline"] + (["sd-gan"] if use_sdgan else []) + (["aspp"] if use_aspp else [])
            rows.append(self._row(
                " + ".join(parts), cfg, real_ds, synthetic if use_sdgan else None,
                {"use_sdgan": use_sdgan, "use_aspp": use_aspp},
            ))
        return rows

    def augmentation(self, real_ds: PhantomDataset, gen_weights: Optional[ModelWeights],
                     multiplier: int = 1) -> List[AblationRow]:
        """No augmentation vs affine-only copies vs generated pairs, at equal volume"""
        n_out = multiplier * len(real_ds)
        rows = []
        for kind in AUGMENTATION_KINDS:
            if kind == "none":
                extra = None
            elif kind == "traditional":
                extra = PhantomDataset(
                    traditional_augment(real_ds.samples, n_out, self.synthesis_seed, self.cfg.affine),
                    name="augmented",
                )
            else:
                extra = self._synthesize(real_ds, gen_weights, n_out)
            rows.append(self._row(kind, self.cfg, real_ds, extra, {"augmentation": kind, "multiplier": multiplier}))
        return rows


def ablation_synthetic_volume(
    real_ds: PhantomDataset,
    gen_weights: Optional[ModelWeights],
    multipliers: Sequence[int],
    cfg: StageConfig,
    gen_cfg: Optional[GeneratorConfig] = None,
    synthesis_seed: int = 0,
    val_ds: Optional[PhantomDataset] = None,
    test_ds: Optional[PhantomDataset] = None,
) -> List[AblationRow]:
    service = AblationService(cfg, gen_cfg, synthesis_seed, val_ds, test_ds)
    return service.synthetic_volume(real_ds, gen_weights, multipliers)


def ablation_modules(
    real_ds: PhantomDataset,
    cfg: StageConfig,
    gen_weights: Optional[ModelWeights] = None,
    gen_cfg: Optional[GeneratorConfig] = None,
    multiplier: int = 1,
    synthesis_seed: int = 0,
    val_ds: Optional[PhantomDataset] = None,
    test_ds: Optional[PhantomDataset] = None,
) -> List[AblationRow]:
    service = AblationService(cfg, gen_cfg, synthesis_seed, val_ds, test_ds)
    return service.modules(real_ds, gen_weights, multiplier)


def ablation_augmentation(
    real_ds: PhantomDataset,
    gen_weights: Optional[ModelWeights],
    cfg: StageConfig,
    gen_cfg: Optional[GeneratorConfig] = None,
    multiplier: int = 1,
    synthesis_seed: int = 0,
    val_ds: Optional[PhantomDataset] = None,
    test_ds: Optional[PhantomDataset] = None,
) -> List[AblationRow]:
    service = AblationService(cfg, gen_cfg, synthesis_seed, val_ds, test_ds)
    return service.augmentation(real_ds, gen_weights, multiplier)
