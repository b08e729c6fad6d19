"""
Command implementations and the exit-code mapping
"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from pydantic import ValidationError

from ribforge.core.config import settings
from ribforge.core.errors import ConfigError, RibforgeError, exit_code_for
from ribforge.data.dataset_io import has_split, load_dataset, read_sample, write_dataset
from ribforge.data.panel import write_panel
from ribforge.data.types import PhantomDataset
from ribforge.models import load_weights
from ribforge.presets import resolve_phantom_config, resolve_stage_config, workflow_config
from ribforge.schemas.configs import AblationConfig, RunConfig, StageConfig
from ribforge.services import (
    ablation_augmentation,
    ablation_modules,
    ablation_synthetic_volume,
    assert_gradcheck,
    evaluate_model,
    run_gradcheck_suite,
    synthesize_pairs,
    train_guidance,
    train_mtunet,
    train_sdgan,
    write_phantom_dataset,
    write_resolved_config,
    write_rows,
    write_stage_artifacts,
)
from ribforge.utils.helpers import deep_merge, read_json, write_json
from ribforge.utils.logger import setup_logging
from ribforge.workflow import run_pipeline
from .parser import build_parser

logger = logging.getLogger(__name__)

EVAL_FILE = "eval.json"


# ---------------------------------------------------------------------------
# Config resolution
# ---------------------------------------------------------------------------
def load_run_config(path: Optional[str]) -> RunConfig:
    if not path:
        return RunConfig()
    return RunConfig.model_validate(read_json(path))


def _preset(args, run: RunConfig) -> str:
    return args.preset or run.preset or settings.DEFAULT_PRESET


def _seed(args, run: RunConfig) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return run.seed if run.seed is not None else 0


def _path(value: Optional[str], run: RunConfig, key: str) -> Optional[str]:
    return value if value else run.paths.get(key)


def stage_config(stage: str, args, run: RunConfig) -> StageConfig:
    """Preset, then ``stage_overrides[stage]``, then ``phantom_overrides``"""
    overrides: Dict[str, Any] = dict(run.stage_overrides.get(stage, {}))
    if run.phantom_overrides:
        overrides = deep_merge(overrides, {"phantom": run.phantom_overrides})
    return resolve_stage_config(stage, _preset(args, run), overrides, seed=_seed(args, run))


def _split_or_all(path: str, split: str) -> PhantomDataset:
    return load_dataset(path, split) if has_split(path, split) else load_dataset(path)


def _optional_split(path: str, split: str) -> Optional[PhantomDataset]:
    return load_dataset(path, split) if has_split(path, split) else None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def cmd_gen_data(args, run: RunConfig) -> int:
    phantom = resolve_phantom_config(_preset(args, run), run.phantom_overrides)
    seed = _seed(args, run)
    write_phantom_dataset(args.out, args.n, seed, phantom)
    write_resolved_config(args.out, {
        "command": "gen-data",
        "preset": _preset(args, run),
        "n": args.n,
        "seed": seed,
        "phantom": phantom.model_dump(mode="json"),
    })
    return 0


def cmd_train(args, run: RunConfig) -> int:
    stage = args.stage
    data = _path(args.data, run, "data")
    guidance_path = _path(args.guidance_weights, run, "guidance_weights")
    synthetic_path = _path(args.synthetic_data, run, "synthetic_data")
    if stage == "sdgan" and not guidance_path:
        raise ConfigError("train sdgan requires --guidance-weights")
    if stage in ("guidance", "sdgan") and not data:
        raise ConfigError(f"train {stage} requires --data")
    if stage == "mtunet" and not (data or synthetic_path):
        raise ConfigError("train mtunet requires --data and/or --synthetic-data")
    cfg = stage_config(stage, args, run)

    train_ds = _split_or_all(data, "train") if data else None
    val_ds = _optional_split(data, "val") if data else None
    if stage == "guidance":
        weights, report = train_guidance(train_ds, cfg, val_ds)
        outputs = {"guidance": weights}
    elif stage == "sdgan":
        gen_w, disc_w, report = train_sdgan(train_ds, load_weights(guidance_path), cfg)
        outputs = {"generator": gen_w, "discriminator": disc_w}
    else:
        synthetic = load_dataset(synthetic_path) if synthetic_path else None
        weights, report = train_mtunet(train_ds, synthetic, cfg, val_ds)
        outputs = {"mtunet": weights}
    write_stage_artifacts(args.out, outputs, report, cfg)
    return 0


def cmd_synthesize(args, run: RunConfig) -> int:
    cfg = stage_config("sdgan", args, run)
    seed = _seed(args, run)
    sources = _split_or_all(args.masks_from, "train")
    synthetic = synthesize_pairs(
        load_weights(args.gen_weights), sources.masksets(), args.n, seed, cfg.affine, cfg.generator
    )
    write_dataset(synthetic, args.out)
    write_resolved_config(args.out, {
        "command": "synthesize",
        "n": args.n,
        "seed": seed,
        "masks_from": str(args.masks_from),
        "affine": cfg.affine.model_dump(mode="json"),
        "generator": cfg.generator.model_dump(mode="json"),
    })
    return 0


def cmd_eval(args, run: RunConfig) -> int:
    weights_file = _path(args.weights, run, "weights")
    if not weights_file and not args.oracle:
        raise ConfigError("eval requires --weights (or --oracle)")
    cfg = stage_config("mtunet", args, run)
    dataset = _split_or_all(args.data, args.split)
    weights = load_weights(weights_file) if weights_file else None
    table = evaluate_model(weights, dataset, cfg, oracle=args.oracle)
    write_json(Path(args.out) / EVAL_FILE, table.model_dump(mode="json"))
    write_resolved_config(args.out, cfg)
    return 0


def cmd_ablation(args, run: RunConfig) -> int:
    cfg = stage_config("mtunet", args, run)
    gen_cfg = stage_config("sdgan", args, run).generator
    ablation = AblationConfig.model_validate(run.stage_overrides.get("ablation", {}))
    gen_path = _path(args.gen_weights, run, "gen_weights")
    gen_weights = load_weights(gen_path) if gen_path else None
    real = _split_or_all(args.data, "train")
    shared = dict(
        gen_cfg=gen_cfg,
        synthesis_seed=ablation.synthesis_seed,
        val_ds=_optional_split(args.data, "val"),
        test_ds=_optional_split(args.data, "test"),
    )
    multiplier = args.multiplier if args.multiplier is not None else ablation.module_multiplier
    if args.kind == "volume":
        multipliers = args.multipliers or ablation.multipliers
        rows = ablation_synthetic_volume(real, gen_weights, multipliers, cfg, **shared)
    elif args.kind == "modules":
        rows = ablation_modules(real, cfg, gen_weights, multiplier=multiplier, **shared)
    else:
        rows = ablation_augmentation(real, gen_weights, cfg, multiplier=multiplier, **shared)
    write_rows(Path(args.out) / f"ablation-{args.kind}.json", rows)
    write_resolved_config(args.out, {
        "command": "ablation",
        "kind": args.kind,
        "mtunet": cfg.model_dump(mode="json"),
        "ablation": ablation.model_dump(mode="json"),
    })
    return 0


def cmd_gradcheck(args, run: Optional[RunConfig] = None) -> int:
    results = run_gradcheck_suite(args.seeds, args.tol, args.ops)
    if args.out:
        write_rows(args.out, results)
    passed = sum(r.passed for r in results)
    logger.info(f"gradcheck: {passed}/{len(results)} checks within {args.tol:g}")
    assert_gradcheck(results)
    return 0


def cmd_render(args, run: Optional[RunConfig] = None) -> int:
    path = write_panel(read_sample(args.sample), args.out)
    logger.info(f"Wrote panel {path}")
    return 0


def cmd_run(args, run: RunConfig) -> int:
    overrides: Dict[str, Any] = dict(run.stage_overrides)
    overrides.pop("ablation", None)
    if args.n is not None:
        overrides["n_samples"] = args.n
    if args.n_synthetic is not None:
        overrides["n_synthetic"] = args.n_synthetic
    if run.phantom_overrides:
        for stage in ("guidance", "sdgan", "mtunet"):
            overrides[stage] = deep_merge(overrides.get(stage, {}), {"phantom": run.phantom_overrides})
    cfg = workflow_config(_preset(args, run), _seed(args, run), overrides)
    state = run_pipeline(cfg, args.out)
    return state["exit_code"]


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "synthesize": cmd_synthesize,
    "eval": cmd_eval,
    "ablation": cmd_ablation,
    "gradcheck": cmd_gradcheck,
    "render": cmd_render,
    "run": cmd_run,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging(args.log_level or settings.LOG_LEVEL, settings.LOG_FILE)
        run = load_run_config(getattr(args, "config", None))
        return COMMANDS[args.command](args, run)
    except (RibforgeError, ValidationError, OSError) as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed (exit {code}): {e}")
        return code
