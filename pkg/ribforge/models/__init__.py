"""
Network architectures and weight files
"""
from .discriminator import PatchDiscriminator, discriminator_forward
from .generator import Generator, OrganEncoder, generator_forward, organ_encoder_forward
from .guidance import GuidanceUNet, guidance_forward
from .mtunet import ASPP, MTUNet, aspp_forward, mtunet_forward, sinusoidal_position_encoding
from .weights import (
    ModelWeights,
    load_module_weights,
    load_weights,
    module_weights,
    parse_weights,
    save_weights,
    serialize_weights,
    weights_digest,
)

__all__ = [
    "PatchDiscriminator",
    "discriminator_forward",
    "Generator",
    "OrganEncoder",
    "generator_forward",
    "organ_encoder_forward",
    "GuidanceUNet",
    "guidance_forward",
    "ASPP",
    "MTUNet",
    "aspp_forward",
    "mtunet_forward",
    "sinusoidal_position_encoding",
    "ModelWeights",
    "load_module_weights",
    "load_weights",
    "module_weights",
    "parse_weights",
    "save_weights",
    "serialize_weights",
    "weights_digest",
]
