"""
End-to-end pipeline orchestration with LangGraph
"""
from .graph import PipelineWorkflow, run_pipeline
from .state import PipelineState, initial_state

__all__ = ["PipelineWorkflow", "run_pipeline", "PipelineState", "initial_state"]
