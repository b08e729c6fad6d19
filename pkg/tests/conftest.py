"""
Shared fixtures: tiny phantoms and short-running stage configs
"""
from typing import Any, Callable, Dict

import numpy as np
import pytest

from ribforge.core.config import Settings
from ribforge.data.types import PhantomDataset
from ribforge.presets import resolve_stage_config
from ribforge.schemas.configs import PhantomConfig, StageConfig
from ribforge.services.data_service import generate_dataset
from ribforge.utils.helpers import deep_merge

SMALL_SIZE = 32

# One short epoch of at most two optimizer steps
QUICK = {"epochs": 1, "batch_size": 2, "max_steps": 2}


def pytest_collection_modifyitems(config, items):
    if Settings().RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="slow; set RIBFORGE_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def desk_phantom_cfg() -> PhantomConfig:
    return PhantomConfig()


@pytest.fixture(scope="session")
def small_phantom_cfg() -> PhantomConfig:
    return PhantomConfig(image_size=SMALL_SIZE)


@pytest.fixture(scope="session")
def small_dataset(small_phantom_cfg) -> PhantomDataset:
    return generate_dataset(6, seed=7, cfg=small_phantom_cfg)


@pytest.fixture(scope="session")
def stage_cfg() -> Callable[..., StageConfig]:
    """Desk stage config with a tiny step budget; keyword overrides are deep-merged"""

    def make(stage: str, seed: int = 0, **overrides: Any) -> StageConfig:
        merged: Dict[str, Any] = deep_merge(QUICK, overrides)
        return resolve_stage_config(stage, "desk", merged, seed=seed)

    return make
