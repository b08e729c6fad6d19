"""
LangGraph workflow: gen-data -> guidance -> sdgan -> synthesize -> mtunet -> evaluate
"""
import logging
from pathlib import Path
from typing import Union

from langgraph.graph import END, StateGraph

from ribforge.schemas.configs import WorkflowConfig
from .nodes import (
    evaluate_node,
    gen_data_node,
    guidance_node,
    mtunet_node,
    report_node,
    sdgan_node,
    synthesize_node,
)
from .state import PipelineState, initial_state

logger = logging.getLogger(__name__)

STAGES = [
    ("gen_data", gen_data_node),
    ("guidance", guidance_node),
    ("sdgan", sdgan_node),
    ("synthesize", synthesize_node),
    ("mtunet", mtunet_node),
    ("evaluate", evaluate_node),
]


def continue_or_report(next_stage: str):
    """Route to ``next_stage``, or straight to the report after a failure"""

    def route(state: PipelineState) -> str:
        return "report" if state.get("failed_stage") else next_stage

    route.__name__ = f"after_to_{next_stage}"
    return route


class PipelineWorkflow:
    """Runs every stage in order; the first failure short-circuits to the report"""

    def __init__(self):
        self.graph = self._build_graph()

    def _build_graph(self):
        workflow = StateGraph(PipelineState)

        for name, node in STAGES:
            workflow.add_node(name, node)
        workflow.add_node("report", report_node)

        workflow.set_entry_point(STAGES[0][0])

        for (name, _), (next_name, _) in zip(STAGES, STAGES[1:]):
            workflow.add_conditional_edges(
                name,
                continue_or_report(next_name),
                {next_name: next_name, "report": "report"},
            )
        workflow.add_edge(STAGES[-1][0], "report")
        workflow.add_edge("report", END)

        return workflow.compile()

    def run(self, config: WorkflowConfig, out_dir: Union[str, Path]) -> PipelineState:
        state = initial_state(config, str(out_dir))
        logger.info(f"Starting {config.preset} run (seed {config.seed}) into {out_dir}")
        return self.graph.invoke(state)


def run_pipeline(config: WorkflowConfig, out_dir: Union[str, Path]) -> PipelineState:
    return PipelineWorkflow().run(config, out_dir)
