from argus_forge.masked_models.checkpoint import load_checkpoint, save_checkpoint
from argus_forge.masked_models.likelihood import (
    ModelParameters,
    forward_logits,
    image_log_likelihood,
    init_parameters,
    nll_loss,
    pixel_log_likelihood,
    sample_image,
)
from argus_forge.masked_models.masks import InvalidMaskSpec, MaskSpec, build_mask
from argus_forge.masked_models.networks import GatedPixelCNN, ModelConfig, PixelCNN, build_network

__all__ = [
    "GatedPixelCNN",
    "InvalidMaskSpec",
    "MaskSpec",
    "ModelConfig",
    "ModelParameters",
    "PixelCNN",
    "build_mask",
    "build_network",
    "forward_logits",
    "image_log_likelihood",
    "init_parameters",
    "load_checkpoint",
    "nll_loss",
    "pixel_log_likelihood",
    "sample_image",
    "save_checkpoint",
]
