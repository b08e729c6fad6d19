"""
On-disk dataset format: binary PGM per channel plus manifest.json per sample

<root>/<split>/<sample_id>/image.pgm
                          /masks/rib_00.pgm ... lung_0.pgm ... clav_0.pgm
                          /manifest.json
<root>/splits.json
"""
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from ribforge.core.errors import DatasetIOError, IntegrityError
from ribforge.schemas.configs import ChannelGroups
from ribforge.utils.helpers import crc32_hex, read_json, write_json
from .types import MaskSet, PhantomDataset, Sample

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
SPLITS_FILE = "splits.json"
SPLIT_NAMES = ("train", "val", "test")
_PGM_HEADER = re.compile(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")

PathLike = Union[str, Path]


def encode_pgm(pixels: np.ndarray) -> bytes:
    """uint8 [H, W] -> binary PGM (P5, maxval 255)"""
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise DatasetIOError(f"PGM needs uint8 [H,W], got {pixels.dtype} {pixels.shape}")
    H, W = pixels.shape
    return f"P5\n{W} {H}\n255\n".encode("ascii") + np.ascontiguousarray(pixels).tobytes()


def decode_pgm(blob: bytes, name: str = "<pgm>") -> np.ndarray:
    match = _PGM_HEADER.match(blob)
    if not match:
        raise DatasetIOError(f"{name}: not a binary PGM")
    W, H, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise DatasetIOError(f"{name}: maxval {maxval} unsupported")
    payload = blob[match.end():]
    if len(payload) != W * H:
        raise DatasetIOError(f"{name}: {len(payload)} payload bytes for {W}x{H}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(H, W).copy()


def quantize_image(image: np.ndarray) -> np.ndarray:
    """[0, 1] floats -> uint8 by round-to-nearest"""
    return np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def dequantize_image(pixels: np.ndarray) -> np.ndarray:
    return (pixels.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def channel_files(groups: ChannelGroups) -> List[str]:
    return [f"masks/{name}.pgm" for name in groups.channel_names()]


def write_sample(sample: Sample, directory: PathLike) -> Path:
    """Write one sample directory; the manifest records a CRC32 per file"""
    directory = Path(directory)
    groups = sample.masks.groups
    H, W = sample.masks.extent
    files = {"image.pgm": encode_pgm(quantize_image(sample.image[0]))}
    for rel, channel in zip(channel_files(groups), sample.masks.stack()):
        files[rel] = encode_pgm((channel * 255).astype(np.uint8))
    try:
        (directory / "masks").mkdir(parents=True, exist_ok=True)
        for rel, blob in files.items():
            (directory / rel).write_bytes(blob)
    except OSError as e:
        logger.error(f"Failed to write sample {directory}: {e}")
        raise DatasetIOError(f"cannot write sample to {directory}: {e}") from e
    manifest = {
        "version": MANIFEST_VERSION,
        "height": H,
        "width": W,
        "groups": groups.counts(),
        "provenance": sample.provenance,
        "seed": int(sample.seed),
        "crc32": {rel: crc32_hex(blob) for rel, blob in files.items()},
    }
    write_json(directory / "manifest.json", manifest)
    return directory


def _read_checked(directory: Path, rel: str, crcs: Dict[str, str]) -> np.ndarray:
    path = directory / rel
    try:
        blob = path.read_bytes()
    except FileNotFoundError as e:
        raise DatasetIOError(f"missing file {path}") from e
    expected = crcs.get(rel)
    if expected is None:
        raise IntegrityError(f"manifest has no CRC32 for {rel}")
    actual = crc32_hex(blob)
    if actual != expected:
        raise IntegrityError(f"CRC32 mismatch in {path}: manifest {expected}, file {actual}")
    return decode_pgm(blob, str(path))


def read_sample(directory: PathLike) -> Sample:
    directory = Path(directory)
    manifest = read_json(directory / "manifest.json")
    try:
        if manifest["version"] != MANIFEST_VERSION:
            raise DatasetIOError(f"{directory}: unsupported manifest version {manifest['version']}")
        H, W = int(manifest["height"]), int(manifest["width"])
        groups = ChannelGroups(**manifest["groups"])
        crcs = manifest["crc32"]
        provenance, seed = manifest["provenance"], int(manifest["seed"])
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetIOError(f"{directory}: malformed manifest ({e})") from e

    image = _read_checked(directory, "image.pgm", crcs)
    channels = []
    for rel in channel_files(groups):
        pixels = _read_checked(directory, rel, crcs)
        if not np.isin(pixels, (0, 255)).all():
            raise IntegrityError(f"{directory / rel} is not a binary mask")
        channels.append((pixels // 255).astype(np.uint8))
    for rel, arr in [("image.pgm", image)] + list(zip(channel_files(groups), channels)):
        if arr.shape != (H, W):
            raise DatasetIOError(f"{directory / rel}: extent {arr.shape} disagrees with manifest {(H, W)}")
    masks = MaskSet.from_stacked(np.stack(channels), groups)
    return Sample(
        image=dequantize_image(image)[None],
        masks=masks,
        provenance=provenance,
        seed=seed,
        sample_id=directory.name,
    )


def write_dataset(dataset: PhantomDataset, directory: PathLike) -> List[str]:
    """One sub-directory per sample; returns the sample ids in order"""
    directory = Path(directory)
    ids = []
    for i, sample in enumerate(dataset):
        sample_id = sample.sample_id or f"sample_{i:05d}"
        write_sample(sample, directory / sample_id)
        ids.append(sample_id)
    logger.info(f"Wrote {len(ids)} samples to {directory}")
    return ids


def read_dataset(directory: PathLike, ids: Optional[List[str]] = None) -> PhantomDataset:
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetIOError(f"dataset directory {directory} does not exist")
    if ids is None:
        ids = sorted(p.name for p in directory.iterdir() if (p / "manifest.json").is_file())
    samples = [read_sample(directory / sample_id) for sample_id in ids]
    return PhantomDataset(samples, name=directory.name)


def write_splits(root: PathLike, splits: Dict[str, PhantomDataset]) -> Path:
    root = Path(root)
    index = {name: write_dataset(ds, root / name) for name, ds in splits.items()}
    return write_json(root / SPLITS_FILE, index)


def read_splits(root: PathLike) -> Dict[str, PhantomDataset]:
    root = Path(root)
    index = read_json(root / SPLITS_FILE)
    return {name: read_dataset(root / name, ids) for name, ids in index.items()}


def load_dataset(path: PathLike, split: Optional[str] = None) -> PhantomDataset:
    """A split of a split tree, or a flat directory of samples"""
    path = Path(path)
    if (path / SPLITS_FILE).is_file():
        index = read_json(path / SPLITS_FILE)
        if split is None:
            return sum((read_dataset(path / name, index[name]) for name in index), PhantomDataset(name=path.name))
        if split not in index:
            raise DatasetIOError(f"{path} has no split '{split}' (available: {sorted(index)})")
        return read_dataset(path / split, index[split])
    return read_dataset(path)


def has_split(path: PathLike, split: str) -> bool:
    path = Path(path)
    return (path / SPLITS_FILE).is_file() and split in read_json(path / SPLITS_FILE)
