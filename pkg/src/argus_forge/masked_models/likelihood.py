"""Parameters, forward passes and per-pixel likelihoods."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch

from argus_forge.image import DimensionError, Image
from argus_forge.masked_models.networks import ModelConfig, build_network

PROB_FLOOR = 1e-12
LOG_FLOOR = math.log(PROB_FLOOR)


@dataclass(eq=False)
class ModelParameters:
    """Learnable weights of one network, keyed by layer name."""

    config: ModelConfig
    weights: dict[str, np.ndarray]
    epoch_tag: int = 0
    _module: torch.nn.Module | None = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        clean = {}
        for name, arr in self.weights.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in weight {name!r}")
            arr.setflags(write=False)
            clean[name] = arr
        expected = {n: tuple(p.shape) for n, p in build_network(self.config).named_parameters()}
        got = {n: a.shape for n, a in clean.items()}
        if expected != got:
            raise ValueError("weights do not match the architecture of the config")
        self.weights = clean

    @classmethod
    def from_module(cls, module: torch.nn.Module, config: ModelConfig, epoch_tag: int = 0):
        weights = {n: p.detach().cpu().numpy().copy() for n, p in module.named_parameters()}
        return cls(config, weights, epoch_tag)

    def module(self) -> torch.nn.Module:
        """A frozen network carrying these weights, built once and shared."""
        with self._lock:
            if self._module is None:
                net = build_network(self.config)
                state = {n: torch.from_numpy(a.copy()) for n, a in self.weights.items()}
                net.load_state_dict(state, strict=False)
                net.eval().requires_grad_(False)
                self._module = net
            return self._module


def init_parameters(config: ModelConfig, seed: int = 0) -> ModelParameters:
    """Freshly initialized parameters; the output layer starts at zero."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        net = build_network(config)
    return ModelParameters.from_module(net, config, epoch_tag=0)


def check_image(config: ModelConfig, image: Image) -> None:
    if image.channels != config.channel_count:
        raise DimensionError(
            f"model expects {config.channel_count} channels, image has {image.channels}"
        )
    if image.bitdepth != config.bitdepth:
        raise DimensionError(
            f"model expects bitdepth {config.bitdepth}, image has {image.bitdepth}"
        )


def to_tensor(images: Sequence[Image]) -> torch.Tensor:
    """Stack images into an ``(N, C, H, W)`` int64 tensor."""
    arr = np.stack([im.pixels for im in images]).astype(np.int64)
    return torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous()


def log_probs(logits: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Floored log-probability of the observed values, shape ``(N, C, H, W)``."""
    lp = torch.log_softmax(logits, dim=2)
    picked = lp.gather(2, x.unsqueeze(2)).squeeze(2)
    return picked.clamp(min=LOG_FLOOR)


def forward_logits(params: ModelParameters, image: Image) -> np.ndarray:
    """Logits of shape ``(H, W, C, V)`` for every pixel, channel and value."""
    check_image(params.config, image)
    with torch.no_grad():
        out = params.module()(to_tensor([image]))
    return out[0].permute(2, 3, 0, 1).numpy()


def pixel_log_likelihood(params: ModelParameters, image: Image) -> np.ndarray:
    """``log p(x_i | x_<i)`` per pixel, summed over channels; shape ``(H, W)``."""
    check_image(params.config, image)
    x = to_tensor([image])
    with torch.no_grad():
        lp = log_probs(params.module()(x), x)
    return lp[0].sum(dim=0).numpy().astype(np.float64)


def image_log_likelihood(params: ModelParameters, image: Image) -> float:
    return float(np.sum(pixel_log_likelihood(params, image), dtype=np.float64))


def nll_loss(params: ModelParameters, images: Sequence[Image]) -> float:
    """Mean per-pixel negative log-likelihood in nats."""
    if len(images) == 0:
        raise ValueError("nll_loss needs a non-empty batch")
    total = 0.0
    count = 0
    for im in images:
        ll = pixel_log_likelihood(params, im)
        total -= float(ll.sum(dtype=np.float64))
        count += ll.size
    return total / count


def sample_image(params: ModelParameters, height: int, width: int, seed: int = 0) -> Image:
    """Draw one image by sequential raster-order sampling.

    Every channel of every pixel costs a full forward pass.
    """
    cfg = params.config
    rng = np.random.default_rng(seed)
    net = params.module()
    x = torch.zeros((1, cfg.channel_count, height, width), dtype=torch.int64)
    with torch.no_grad():
        for r in range(height):
            for c in range(width):
                for ch in range(cfg.channel_count):
                    logits = net(x[:, :, : r + 1, :])[0, ch, :, r, c].to(torch.float64)
                    p = torch.softmax(logits, dim=0).numpy()
                    cdf = np.cumsum(p)
                    v = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
                    x[0, ch, r, c] = min(v, cfg.levels - 1)
    return Image(x[0].permute(1, 2, 0).numpy(), cfg.bitdepth)
