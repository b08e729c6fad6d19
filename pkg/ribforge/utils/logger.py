"""
Logging configuration for ribforge commands and services
"""
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

from ribforge.core.errors import ConfigError

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Chatty at INFO during graph compilation
QUIET_LOGGERS = ("langgraph",)


def resolve_level(name: str) -> int:
    level = logging.getLevelName(name.strip().upper())
    if not isinstance(level, int):
        raise ConfigError(f"unknown log level {name!r}")
    return level


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """Route every ribforge logger to stdout, plus ``log_file`` when given

    Calling it again replaces the handlers, so repeated CLI invocations in one
    process (tests) do not duplicate output.
    """
    level = resolve_level(log_level)
    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)

    root = logging.getLogger()
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    handlers = [logging.StreamHandler(sys.stdout)]
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(path, encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(level, logging.WARNING))

    logging.getLogger(__name__).debug(f"logging at {logging.getLevelName(level)}")
    return root


@contextmanager
def log_duration(name: str, logger: Optional[logging.Logger] = None) -> Iterator[dict]:
    """Time a block; the yielded dict receives ``elapsed_s`` on exit"""
    log = logger or logging.getLogger(__name__)
    timing = {"elapsed_s": 0.0}
    start = time.perf_counter()
    log.info(f"{name} started")
    try:
        yield timing
    finally:
        timing["elapsed_s"] = time.perf_counter() - start
        log.info(f"{name} finished in {timing['elapsed_s']:.2f}s")
