"""
Pipeline stages
"""
from .ablation_service import AblationService, ablation_augmentation, ablation_modules, ablation_synthetic_volume
from .artifacts import write_resolved_config, write_rows, write_stage_artifacts
from .data_service import generate_dataset, generate_splits, write_phantom_dataset
from .gradcheck_service import assert_gradcheck, run_gradcheck_suite
from .guidance_service import GuidanceService, build_guidance, train_guidance
from .mtunet_service import MTUNetService, build_mtunet, evaluate_model, train_mtunet
from .sdgan_service import SDGANService, evaluate_semantic_consistency, train_sdgan
from .synthesis_service import synthesize_pairs

__all__ = [
    "AblationService",
    "ablation_augmentation",
    "ablation_modules",
    "ablation_synthetic_volume",
    "write_resolved_config",
    "write_rows",
    "write_stage_artifacts",
    "generate_dataset",
    "generate_splits",
    "write_phantom_dataset",
    "assert_gradcheck",
    "run_gradcheck_suite",
    "GuidanceService",
    "build_guidance",
    "train_guidance",
    "MTUNetService",
    "build_mtunet",
    "evaluate_model",
    "train_mtunet",
    "SDGANService",
    "evaluate_semantic_consistency",
    "train_sdgan",
    "synthesize_pairs",
]
