import logging

import pytest

from ribforge.cli import main
from ribforge.core.errors import ConfigError
from ribforge.utils.logger import log_duration, resolve_level, setup_logging


@pytest.fixture
def restore_root():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield root
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)


def test_resolve_level():
    assert resolve_level("debug") == logging.DEBUG
    assert resolve_level(" WARNING ") == logging.WARNING
    with pytest.raises(ConfigError, match="loud"):
        resolve_level("loud")


def test_setup_replaces_handlers(restore_root, tmp_path):
    log_file = tmp_path / "logs" / "run.log"
    setup_logging("INFO", str(log_file))
    setup_logging("DEBUG", str(log_file))
    assert len(restore_root.handlers) == 2
    assert restore_root.level == logging.DEBUG
    assert logging.getLogger("langgraph").level == logging.WARNING

    logging.getLogger("ribforge.test").info("written to file")
    for handler in restore_root.handlers:
        handler.flush()
    assert "ribforge.test - INFO - written to file" in log_file.read_text()


def test_log_duration_records_elapsed():
    with log_duration("block") as timing:
        pass
    assert timing["elapsed_s"] >= 0.0


def test_cli_rejects_unknown_log_level(restore_root):
    assert main(["--log-level", "loud", "gradcheck", "--ops", "relu", "--seeds", "0"]) == 2
