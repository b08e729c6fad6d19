"""
Application configuration management
"""
from dotenv import load_dotenv
load_dotenv()

import os
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings, read from the environment (prefix RIBFORGE_)"""

    # Runtime
    THREADS: int = Field(default=1, ge=1)
    DEFAULT_PRESET: Literal["desk", "full"] = Field(default="desk")

    # Logging
    LOG_LEVEL: str = Field(default="INFO")
    LOG_FILE: Optional[str] = Field(default=None)

    # Tests
    RUN_SLOW: bool = Field(default=False)

    model_config = SettingsConfigDict(
        env_prefix="RIBFORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


def apply_thread_limits(threads: int) -> None:
    """Cap BLAS/OpenMP pools; only effective before numpy is first imported"""
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(threads))


# Global settings instance
settings = Settings()
