"""
Utility helper functions
"""
import copy
import hashlib
import json
import zlib
from pathlib import Path
from typing import Any, Dict, Union

from ribforge.core.errors import DatasetIOError

PathLike = Union[str, Path]

TIMING_FILE = "timing.json"


def crc32_hex(data: bytes) -> str:
    """CRC32 as 8 lowercase hex digits"""
    return f"{zlib.crc32(data) & 0xFFFFFFFF:08x}"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_json(path: PathLike, payload: Any) -> Path:
    """Write JSON with sorted keys so identical payloads give identical bytes"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"cannot write {path}: {e}") from e
    return path


def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise DatasetIOError(f"missing file {path}") from e
    except json.JSONDecodeError as e:
        raise DatasetIOError(f"{path} is not valid JSON: {e}") from e
    except OSError as e:
        raise DatasetIOError(f"cannot read {path}: {e}") from e


def deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``overrides`` into a copy of ``base``"""
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def tree_crc(root: PathLike) -> Dict[str, str]:
    """CRC32 of every file under ``root`` keyed by relative POSIX path

    ``timing.json`` files hold wall-clock measurements and are skipped.
    """
    root = Path(root)
    return {
        p.relative_to(root).as_posix(): crc32_hex(p.read_bytes())
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != TIMING_FILE
    }
