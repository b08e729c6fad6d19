"""
Artifact directories: weight files, reports and the resolved-config echo
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel

from ribforge.core.errors import IntegrityError
from ribforge.models import ModelWeights, save_weights
from ribforge.schemas.reports import TrainReport
from ribforge.utils.helpers import TIMING_FILE, write_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

WEIGHTS_SUFFIX = ".sdgw"
REPORT_FILE = "report.json"
RESOLVED_CONFIG_FILE = "resolved-config.json"


def weights_path(out: PathLike, name: str) -> Path:
    return Path(out) / f"{name}{WEIGHTS_SUFFIX}"


def write_resolved_config(out: PathLike, cfg: Union[BaseModel, Dict[str, Any]]) -> Path:
    payload = cfg.model_dump(mode="json") if isinstance(cfg, BaseModel) else cfg
    return write_json(Path(out) / RESOLVED_CONFIG_FILE, payload)


def write_stage_artifacts(
    out: PathLike,
    weights: Dict[str, ModelWeights],
    report: TrainReport,
    cfg: Optional[BaseModel] = None,
) -> Dict[str, Path]:
    """Save each network as ``<name>.sdgw`` and check its digest against the report"""
    out = Path(out)
    paths = {}
    for name, w in weights.items():
        path = weights_path(out, name)
        digest = save_weights(w, path)
        expected = report.weight_digests.get(name)
        if expected is not None and expected != digest:
            raise IntegrityError(f"{path}: digest {digest[:12]} differs from report {expected[:12]}")
        paths[name] = path
        logger.info(f"Saved {name} weights to {path} (sha256 {digest[:12]})")
    write_json(out / REPORT_FILE, report.model_dump(mode="json"))
    write_json(out / TIMING_FILE, {"stage": report.stage, "elapsed_s": report.elapsed_s})
    if cfg is not None:
        write_resolved_config(out, cfg)
    return paths


def write_rows(path: PathLike, rows: List[BaseModel]) -> Path:
    return write_json(path, [row.model_dump(mode="json") for row in rows])
