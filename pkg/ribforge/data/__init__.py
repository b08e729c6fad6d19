"""
Procedural chest phantoms, affine mask synthesis and the dataset format
"""
from .types import AffineParams, MaskSet, PhantomDataset, Sample
from .render import render_xray
from .phantom import generate_phantom, phantom_masks
from .affine import (
    affine_transform_maskset,
    affine_transform_sample,
    round_robin_order,
    sample_affine_params,
    traditional_augment,
)
from .dataset_io import (
    load_dataset,
    read_dataset,
    read_sample,
    read_splits,
    write_dataset,
    write_sample,
    write_splits,
)
from .split import split_dataset

__all__ = [
    "AffineParams",
    "MaskSet",
    "PhantomDataset",
    "Sample",
    "render_xray",
    "generate_phantom",
    "phantom_masks",
    "affine_transform_maskset",
    "affine_transform_sample",
    "round_robin_order",
    "sample_affine_params",
    "traditional_augment",
    "load_dataset",
    "read_dataset",
    "read_sample",
    "read_splits",
    "write_dataset",
    "write_sample",
    "write_splits",
    "split_dataset",
]
