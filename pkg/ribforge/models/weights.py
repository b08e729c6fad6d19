"""
Named weight collections and the SDGW binary weight file

Layout (little-endian): magic "SDGW", u32 version, u32 tensor count, then per
tensor u16 name length, UTF-8 name, u8 rank, u32 extents, f32 payload; a
trailing u32 CRC32 covers every preceding byte.
"""
import hashlib
import logging
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from ribforge.core.errors import DatasetIOError, WeightsFormatError, WeightsMismatchError
from ribforge.nn.module import Module

logger = logging.getLogger(__name__)

MAGIC = b"SDGW"
FORMAT_VERSION = 1
_F32 = np.dtype("<f4")


@dataclass
class ModelWeights:
    """Ordered (name, array) pairs; names are unique"""

    entries: List[Tuple[str, np.ndarray]] = field(default_factory=list)
    version: int = FORMAT_VERSION

    def __post_init__(self):
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise WeightsMismatchError(f"duplicate tensor names: {dupes}")

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.entries]

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def equals(self, other: "ModelWeights") -> bool:
        if self.names != other.names:
            return False
        return all(
            a.shape == b.shape and a.astype(_F32).tobytes() == b.astype(_F32).tobytes()
            for (_, a), (_, b) in zip(self.entries, other.entries)
        )


def module_weights(module: Module) -> ModelWeights:
    """Snapshot of a module's parameters and buffers"""
    return ModelWeights([(name, np.array(arr, dtype=np.float32)) for name, arr in module.named_state()])


def load_module_weights(module: Module, weights: ModelWeights) -> None:
    """Copy ``weights`` into ``module``; the first name/shape difference is reported"""
    expected = [(name, arr.shape) for name, arr in module.named_state()]
    provided = [(name, arr.shape) for name, arr in weights.entries]
    for i, (exp, got) in enumerate(zip(expected, provided)):
        if exp[0] != got[0]:
            raise WeightsMismatchError(
                f"first mismatched tensor at position {i}: model expects '{exp[0]}', file has '{got[0]}'"
            )
        if exp[1] != got[1]:
            raise WeightsMismatchError(
                f"first mismatched tensor '{exp[0]}': model shape {exp[1]}, file shape {got[1]}"
            )
    if len(expected) != len(provided):
        extra = provided[len(expected):] or expected[len(provided):]
        side = "file" if len(provided) > len(expected) else "model"
        raise WeightsMismatchError(
            f"tensor count differs (model {len(expected)}, file {len(provided)}); "
            f"first unmatched {side} tensor '{extra[0][0]}'"
        )
    module.assign_state(weights.as_dict())


def serialize_weights(weights: ModelWeights) -> bytes:
    parts = [MAGIC, struct.pack("<II", weights.version, len(weights.entries))]
    for name, arr in weights.entries:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=_F32).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def parse_weights(blob: bytes) -> ModelWeights:
    """Decode SDGW bytes; the CRC is verified before any field is read"""
    if len(blob) < len(MAGIC) + 12:
        raise WeightsFormatError(f"weight file too short ({len(blob)} bytes)")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise WeightsFormatError("weight file CRC32 mismatch (truncated or corrupt)")
    if body[:4] != MAGIC:
        raise WeightsFormatError(f"bad magic {body[:4]!r}")
    version, count = struct.unpack_from("<II", body, 4)
    if version != FORMAT_VERSION:
        raise WeightsFormatError(f"unsupported weight format version {version}")

    offset = 12
    entries = []
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", body, offset)
            offset += 1
            shape = struct.unpack_from(f"<{rank}I", body, offset)
            offset += 4 * rank
            n_bytes = int(np.prod(shape, dtype=np.int64)) * 4
            if offset + n_bytes > len(body):
                raise WeightsFormatError(f"payload of '{name}' runs past end of file")
            arr = np.frombuffer(body, dtype=_F32, count=n_bytes // 4, offset=offset).reshape(shape)
            entries.append((name, arr.astype(np.float32)))
            offset += n_bytes
    except (struct.error, UnicodeDecodeError) as e:
        raise WeightsFormatError(f"malformed weight file: {e}") from e
    if offset != len(body):
        raise WeightsFormatError(f"{len(body) - offset} trailing bytes after {count} tensors")
    return ModelWeights(entries, version)


def weights_digest(weights: ModelWeights) -> str:
    """SHA-256 hex of the serialized bytes"""
    return hashlib.sha256(serialize_weights(weights)).hexdigest()


def save_weights(weights: ModelWeights, path: Union[str, Path]) -> str:
    """Write an SDGW file and return its digest"""
    path = Path(path)
    blob = serialize_weights(weights)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
    except OSError as e:
        logger.error(f"Failed to write weights to {path}: {e}")
        raise DatasetIOError(f"cannot write weights to {path}: {e}") from e
    digest = hashlib.sha256(blob).hexdigest()
    logger.info(f"Saved {len(weights)} tensors to {path} (sha256 {digest[:12]})")
    return digest


def load_weights(path: Union[str, Path]) -> ModelWeights:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DatasetIOError(f"cannot read weights from {path}: {e}") from e
    weights = parse_weights(blob)
    logger.debug(f"Loaded {len(weights)} tensors from {path}")
    return weights
