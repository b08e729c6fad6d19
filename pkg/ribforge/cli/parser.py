"""
Argument parser for the ``ribforge`` command
"""
import argparse

from ribforge.presets import PRESETS, STAGES
from ribforge.services.ablation_service import AUGMENTATION_KINDS


def _common(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--config", help="RunConfig JSON (preset, seed, paths, overrides)")
    parser.add_argument("--preset", choices=PRESETS, help="Preset; overrides the config's preset")
    parser.add_argument("--seed", type=int, help="Seed; overrides the config's seed")
    parser.add_argument("--out", required=out_required, help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ribforge",
        description="SD-GAN augmentation and MTUNet rib segmentation on chest phantoms",
    )
    parser.add_argument("--log-level", help="Logging level (default from RIBFORGE_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Generate a phantom dataset split 6:2:2")
    _common(p)
    p.add_argument("--n", type=int, default=100, help="Number of phantoms")

    p = sub.add_parser("train", help="Train one stage")
    p.add_argument("stage", choices=STAGES)
    _common(p)
    p.add_argument("--data", help="Dataset directory (split tree or flat)")
    p.add_argument("--guidance-weights", help="Guidance weights file (sdgan)")
    p.add_argument("--synthetic-data", help="Synthetic dataset directory (mtunet)")

    p = sub.add_parser("synthesize", help="Synthesize image-mask pairs with a trained generator")
    _common(p)
    p.add_argument("--gen-weights", required=True, help="Generator weights file")
    p.add_argument("--masks-from", required=True, help="Dataset whose masks are transformed")
    p.add_argument("--n", type=int, required=True, help="Number of pairs")

    p = sub.add_parser("eval", help="Evaluate MTUNet weights on a dataset")
    _common(p)
    p.add_argument("--weights", help="MTUNet weights file")
    p.add_argument("--data", required=True, help="Dataset directory; the test split is used when present")
    p.add_argument("--split", default="test", help="Split to evaluate (default: test)")
    p.add_argument("--oracle", action="store_true", help="Score ground truth against itself")

    p = sub.add_parser("ablation", help="Run an ablation harness")
    _common(p)
    p.add_argument("--kind", required=True, choices=("volume", "modules", "augmentation"),
                   help=f"augmentation compares {', '.join(AUGMENTATION_KINDS)} at equal volume")
    p.add_argument("--data", required=True, help="Phantom dataset split tree")
    p.add_argument("--gen-weights", help="Generator weights file")
    p.add_argument("--multipliers", type=int, nargs="+", help="Synthetic multipliers (volume)")
    p.add_argument("--multiplier", type=int, help="Synthetic multiplier (modules, augmentation)")

    p = sub.add_parser("gradcheck", help="Finite-difference check of every differentiable op")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--ops", nargs="*", default=[], help="Subset of ops")
    p.add_argument("--out", help="Optional JSON results file")

    p = sub.add_parser("render", help="Render a sample as an image + mask overlay PPM panel")
    p.add_argument("--sample", required=True, help="Sample directory")
    p.add_argument("--out", required=True, help="Output .ppm path")

    p = sub.add_parser("run", help="Run every stage end to end")
    _common(p)
    p.add_argument("--n", type=int, help="Number of phantoms")
    p.add_argument("--n-synthetic", type=int, help="Number of synthetic pairs")
    return parser
