"""
LangGraph nodes: one pipeline stage each, reading and writing artifact directories
"""
import logging
from functools import wraps
from pathlib import Path
from typing import Callable

from ribforge.core.errors import exit_code_for
from ribforge.data.dataset_io import load_dataset, write_dataset
from ribforge.models import load_weights
from ribforge.services import (
    evaluate_model,
    synthesize_pairs,
    train_guidance,
    train_mtunet,
    train_sdgan,
    write_phantom_dataset,
    write_resolved_config,
    write_stage_artifacts,
)
from ribforge.services.artifacts import weights_path
from ribforge.utils.helpers import write_json
from .state import PipelineState

logger = logging.getLogger(__name__)

RUN_REPORT_FILE = "run-report.json"


def stage_node(name: str) -> Callable:
    """Record completion, or the failure that stops the run"""

    def decorate(fn: Callable[[PipelineState], PipelineState]) -> Callable[[PipelineState], PipelineState]:
        @wraps(fn)
        def node(state: PipelineState) -> PipelineState:
            try:
                state = fn(state)
                state["completed"] = state["completed"] + [name]
                return state
            except Exception as e:
                logger.error(f"Error in {name} node: {e}")
                state["failed_stage"] = name
                state["error_message"] = str(e)
                state["exit_code"] = exit_code_for(e)
                return state

        return node

    return decorate


def _stage_dir(state: PipelineState, name: str) -> Path:
    return Path(state["out_dir"]) / name


@stage_node("gen_data")
def gen_data_node(state: PipelineState) -> PipelineState:
    cfg = state["config"]
    out = _stage_dir(state, "data")
    write_phantom_dataset(out, cfg.n_samples, cfg.seed, cfg.guidance.phantom)
    state["data_dir"] = str(out)
    return state


@stage_node("guidance")
def guidance_node(state: PipelineState) -> PipelineState:
    cfg = state["config"].guidance
    out = _stage_dir(state, "guidance")
    weights, report = train_guidance(
        load_dataset(state["data_dir"], "train"), cfg, load_dataset(state["data_dir"], "val")
    )
    write_stage_artifacts(out, {"guidance": weights}, report, cfg)
    state["guidance_weights"] = str(weights_path(out, "guidance"))
    state["digests"] = {**state["digests"], "guidance": report.weight_digest}
    return state


@stage_node("sdgan")
def sdgan_node(state: PipelineState) -> PipelineState:
    cfg = state["config"].sdgan
    out = _stage_dir(state, "sdgan")
    gen_w, disc_w, report = train_sdgan(
        load_dataset(state["data_dir"], "train"), load_weights(state["guidance_weights"]), cfg
    )
    write_stage_artifacts(out, {"generator": gen_w, "discriminator": disc_w}, report, cfg)
    state["generator_weights"] = str(weights_path(out, "generator"))
    state["digests"] = {**state["digests"], "generator": report.weight_digest}
    return state


@stage_node("synthesize")
def synthesize_node(state: PipelineState) -> PipelineState:
    cfg = state["config"]
    out = _stage_dir(state, "synthetic")
    train = load_dataset(state["data_dir"], "train")
    synthetic = synthesize_pairs(
        load_weights(state["generator_weights"]),
        train.masksets(),
        cfg.n_synthetic,
        cfg.seed,
        cfg.mtunet.affine,
        cfg.sdgan.generator,
    )
    write_dataset(synthetic, out)
    state["synthetic_dir"] = str(out)
    return state


@stage_node("mtunet")
def mtunet_node(state: PipelineState) -> PipelineState:
    cfg = state["config"].mtunet
    out = _stage_dir(state, "mtunet")
    weights, report = train_mtunet(
        load_dataset(state["data_dir"], "train"),
        load_dataset(state["synthetic_dir"]),
        cfg,
        load_dataset(state["data_dir"], "val"),
    )
    write_stage_artifacts(out, {"mtunet": weights}, report, cfg)
    state["mtunet_weights"] = str(weights_path(out, "mtunet"))
    state["digests"] = {**state["digests"], "mtunet": report.weight_digest}
    return state


@stage_node("evaluate")
def evaluate_node(state: PipelineState) -> PipelineState:
    cfg = state["config"].mtunet
    table = evaluate_model(load_weights(state["mtunet_weights"]), load_dataset(state["data_dir"], "test"), cfg)
    write_json(_stage_dir(state, "eval") / "eval.json", table.model_dump(mode="json"))
    state["eval"] = table.model_dump(mode="json")
    return state


def report_node(state: PipelineState) -> PipelineState:
    """Write the run summary; the last node on every path"""
    out = Path(state["out_dir"])
    write_resolved_config(out, state["config"])
    summary = {
        "completed": state["completed"],
        "digests": state["digests"],
        "eval": state["eval"],
        "failed_stage": state["failed_stage"],
        "error": state["error_message"],
        "exit_code": state["exit_code"],
    }
    write_json(out / RUN_REPORT_FILE, summary)
    if state["failed_stage"]:
        logger.error(f"Run stopped at {state['failed_stage']}: {state['error_message']}")
    else:
        logger.info(f"Run finished: {', '.join(state['completed'])}")
    return state
