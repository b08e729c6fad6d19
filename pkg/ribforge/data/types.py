"""
In-memory sample types
"""
from dataclasses import dataclass, field
from typing import Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np

from ribforge.core.errors import ConfigError, ShapeError
from ribforge.schemas.configs import GROUP_NAMES, ChannelGroups

Provenance = Literal["real", "synthetic"]


@dataclass(eq=False)
class MaskSet:
    """Binary uint8 masks per group, each [C, H, W]"""

    ribs: np.ndarray
    lungs: np.ndarray
    clavicles: np.ndarray

    def __post_init__(self):
        shapes = set()
        for name in GROUP_NAMES:
            arr = np.asarray(getattr(self, name))
            if arr.ndim != 3:
                raise ShapeError(f"{name} masks must be [C,H,W], got {arr.shape}")
            if arr.size and arr.max() > 1:
                raise ShapeError(f"{name} masks are not binary")
            setattr(self, name, arr.astype(np.uint8, copy=False))
            shapes.add(arr.shape[1:])
        if len(shapes) != 1:
            raise ShapeError(f"mask groups disagree on extent: {sorted(shapes)}")

    @property
    def groups(self) -> ChannelGroups:
        return ChannelGroups(ribs=self.ribs.shape[0], lungs=self.lungs.shape[0], clavicles=self.clavicles.shape[0])

    @property
    def extent(self) -> Tuple[int, int]:
        return self.ribs.shape[1], self.ribs.shape[2]

    def stack(self) -> np.ndarray:
        """[Cr+Cl+Cc, H, W] in group order"""
        return np.concatenate([self.ribs, self.lungs, self.clavicles], axis=0)

    @classmethod
    def from_stacked(cls, stacked: np.ndarray, groups: ChannelGroups) -> "MaskSet":
        if stacked.shape[0] != groups.total:
            raise ShapeError(f"{stacked.shape[0]} channels do not match grouping {groups.counts()}")
        s = groups.slices()
        return cls(*(np.ascontiguousarray(stacked[s[name]]) for name in GROUP_NAMES))

    def equals(self, other: "MaskSet") -> bool:
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in GROUP_NAMES)


@dataclass(eq=False)
class Sample:
    """Image [1, H, W] in [0, 1] paired with its masks"""

    image: np.ndarray
    masks: MaskSet
    provenance: Provenance = "real"
    seed: int = 0
    sample_id: Optional[str] = None

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float32)
        if self.image.ndim != 3 or self.image.shape[0] != 1:
            raise ShapeError(f"image must be [1,H,W], got {self.image.shape}")
        if self.image.shape[1:] != self.masks.extent:
            raise ShapeError(f"image extent {self.image.shape[1:]} != mask extent {self.masks.extent}")
        if self.provenance not in ("real", "synthetic"):
            raise ConfigError(f"unknown provenance '{self.provenance}'")


@dataclass(frozen=True)
class AffineParams:
    """Rotation (degrees, counter-clockwise), translation as (dx, dy) extent fractions, scale, flip"""

    rotation_deg: float = 0.0
    translate_frac: Tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    hflip: bool = False

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError(f"affine scale must be positive, got {self.scale}")

    @property
    def is_identity(self) -> bool:
        return self.rotation_deg == 0 and self.translate_frac == (0.0, 0.0) and self.scale == 1 and not self.hflip


@dataclass
class PhantomDataset:
    """Ordered collection of samples sharing extent and channel grouping"""

    samples: List[Sample] = field(default_factory=list)
    name: str = "dataset"

    def __post_init__(self):
        if self.samples:
            ref = self.samples[0]
            for s in self.samples[1:]:
                if s.masks.extent != ref.masks.extent or s.masks.groups != ref.masks.groups:
                    raise ShapeError(f"sample {s.sample_id} disagrees with {ref.sample_id} on extent or grouping")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __getitem__(self, i) -> Sample:
        return self.samples[i]

    @property
    def groups(self) -> ChannelGroups:
        if not self.samples:
            raise ConfigError(f"{self.name} is empty")
        return self.samples[0].masks.groups

    def images(self, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """[N, 1, H, W] float32 in [0, 1]"""
        chosen = self.samples if indices is None else [self.samples[i] for i in indices]
        return np.stack([s.image for s in chosen]).astype(np.float32)

    def masks(self, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """[N, C, H, W] float32 {0, 1}"""
        chosen = self.samples if indices is None else [self.samples[i] for i in indices]
        return np.stack([s.masks.stack() for s in chosen]).astype(np.float32)

    def masksets(self) -> List[MaskSet]:
        return [s.masks for s in self.samples]

    def __add__(self, other: "PhantomDataset") -> "PhantomDataset":
        return PhantomDataset(self.samples + other.samples, name=f"{self.name}+{other.name}")
