"""Unsupervised splice localization with autoregressive generative ensembles.

Per-pixel conditional likelihoods from masked-convolution networks
(PixelCNN and Gated PixelCNN) are averaged over checkpoints and dihedral
scan orderings; pixels with high estimated information are flagged.
"""

from argus_forge.image import Image
from argus_forge.masked_models import (
    ModelConfig,
    ModelParameters,
    build_mask,
    forward_logits,
    image_log_likelihood,
    init_parameters,
    nll_loss,
    pixel_log_likelihood,
    sample_image,
)
from argus_forge.orderings import apply_transform, invert_transform, transform_mask

__version__ = "0.1.0"

__all__ = [
    "Image",
    "ModelConfig",
    "ModelParameters",
    "apply_transform",
    "build_mask",
    "forward_logits",
    "image_log_likelihood",
    "init_parameters",
    "invert_transform",
    "nll_loss",
    "pixel_log_likelihood",
    "sample_image",
    "transform_mask",
]
