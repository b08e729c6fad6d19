"""
Workflow state carried between pipeline nodes
"""
from typing import Any, Dict, List, Optional

from typing_extensions import TypedDict

from ribforge.schemas.configs import WorkflowConfig


class PipelineState(TypedDict):
    """State for one end-to-end run"""
    # Run inputs
    config: WorkflowConfig
    out_dir: str

    # Artifact locations, filled in as stages finish
    data_dir: Optional[str]
    guidance_weights: Optional[str]
    generator_weights: Optional[str]
    synthetic_dir: Optional[str]
    mtunet_weights: Optional[str]

    # Results
    digests: Dict[str, str]
    eval: Optional[Dict[str, Any]]
    completed: List[str]

    # Failure tracking
    failed_stage: Optional[str]
    error_message: Optional[str]
    exit_code: int


def initial_state(config: WorkflowConfig, out_dir: str) -> PipelineState:
    return PipelineState(
        config=config,
        out_dir=out_dir,
        data_dir=None,
        guidance_weights=None,
        generator_weights=None,
        synthetic_dir=None,
        mtunet_weights=None,
        digests={},
        eval=None,
        completed=[],
        failed_stage=None,
        error_message=None,
        exit_code=0,
    )
