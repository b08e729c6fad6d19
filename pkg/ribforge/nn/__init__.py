"""
Layers, losses, optimizers and schedules
"""
from .module import Module, ModuleList, Parameter, Sequential
from .layers import BatchNorm2d, Conv2d, ConvTranspose2d, LayerNorm, Linear
from .losses import bce_loss, dice_loss, discriminator_loss, gan_losses, generator_loss, seg_loss
from .optim import SGD, Adam, OptimizerState, adam_step, sgd_momentum_step
from .schedule import LrSchedule, lr_at

__all__ = [
    "Module",
    "ModuleList",
    "Parameter",
    "Sequential",
    "BatchNorm2d",
    "Conv2d",
    "ConvTranspose2d",
    "LayerNorm",
    "Linear",
    "bce_loss",
    "dice_loss",
    "discriminator_loss",
    "gan_losses",
    "generator_loss",
    "seg_loss",
    "SGD",
    "Adam",
    "OptimizerState",
    "adam_step",
    "sgd_momentum_step",
    "LrSchedule",
    "lr_at",
]
