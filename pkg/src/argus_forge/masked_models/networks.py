"""PixelCNN and Gated PixelCNN networks over categorical pixel values.

Both networks map an integer image of shape ``(N, C, H, W)`` to logits of
shape ``(N, C, V, H, W)`` with ``V = 2 ** bitdepth``. Hidden feature maps
are split into ``C`` contiguous channel groups so that the logits of channel
``j`` at a pixel see channels ``< j`` of that pixel and every channel of
earlier pixels, never more.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from argus_forge.masked_models.masks import MaskSpec, build_mask

FAMILIES = ("pixelcnn", "gated")
DEFAULT_BLOCKS = {"pixelcnn": 7, "gated": 6}


@dataclass(frozen=True)
class ModelConfig:
    family: str = "gated"
    block_count: int | None = None
    hidden_width: int = 60
    bitdepth: int = 8
    channel_count: int = 3
    kernel_size: int = 3
    input_kernel: int = 7
    embedding_dim: int = 8

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.block_count is None:
            object.__setattr__(self, "block_count", DEFAULT_BLOCKS[self.family])
        if self.block_count < 1:
            raise ValueError("block_count must be >= 1")
        if self.channel_count < 1:
            raise ValueError("channel_count must be >= 1")
        if self.hidden_width < self.channel_count or self.hidden_width % self.channel_count:
            raise ValueError(
                f"hidden_width {self.hidden_width} must be a positive multiple of "
                f"channel_count {self.channel_count}"
            )
        for k in (self.kernel_size, self.input_kernel):
            if k < 1 or k % 2 == 0:
                raise ValueError(f"kernel sizes must be odd, got {k}")
        if not 1 <= self.bitdepth <= 16:
            raise ValueError("bitdepth must be in [1, 16]")
        if self.embedding_dim < 0:
            raise ValueError("embedding_dim must be >= 0")

    @property
    def levels(self) -> int:
        return 1 << self.bitdepth

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class MaskedConv2d(nn.Conv2d):
    """Zero-padded convolution whose kernel is multiplied by a fixed mask."""

    def __init__(self, in_channels, out_channels, kernel_size, mask: np.ndarray):
        kh, kw = kernel_size
        super().__init__(in_channels, out_channels, (kh, kw), padding=(kh // 2, kw // 2))
        self.register_buffer("mask", torch.from_numpy(np.ascontiguousarray(mask)))
        with torch.no_grad():
            self.weight.mul_(self.mask)

    def forward(self, x):
        return F.conv2d(x, self.weight * self.mask, self.bias, padding=self.padding)


def _raster_conv(mask_type, c_in, c_out, groups, kh, kw, repeat_out=1):
    spec = MaskSpec(mask_type, kh, kw, groups, groups, c_in, c_out)
    mask = np.concatenate([build_mask(spec)] * repeat_out, axis=0)
    return MaskedConv2d(c_in, c_out * repeat_out, (kh, kw), mask)


class InputEncoding(nn.Module):
    """Per-channel features: the value scaled to [-1, 1] plus a learned embedding.

    Output channels are laid out channel by channel, ``1 + embedding_dim``
    features each, so image channel ``j`` lands in hidden group ``j``.
    """

    def __init__(self, channels: int, levels: int, embedding_dim: int):
        super().__init__()
        self.levels = levels
        self.embeddings = nn.ModuleList(nn.Embedding(levels, embedding_dim) for _ in range(channels))
        self.width = channels * (1 + embedding_dim)

    def forward(self, x):
        scaled = x.to(torch.float32) * (2.0 / (self.levels - 1)) - 1.0
        parts = []
        for j, emb in enumerate(self.embeddings):
            parts.append(scaled[:, j : j + 1])
            parts.append(emb(x[:, j]).permute(0, 3, 1, 2))
        return torch.cat(parts, dim=1)


def _gate(x: torch.Tensor) -> torch.Tensor:
    f, g = x.chunk(2, dim=1)
    return torch.tanh(f) * torch.sigmoid(g)


class _OutputHead(nn.Module):
    def __init__(self, width, groups, levels):
        super().__init__()
        self.hidden = _raster_conv("B", width, width, groups, 1, 1)
        self.logits = _raster_conv("B", width, groups * levels, groups, 1, 1)
        nn.init.zeros_(self.logits.weight)
        nn.init.zeros_(self.logits.bias)

    def forward(self, x):
        return self.logits(F.relu(self.hidden(F.relu(x))))


class ResidualBlock(nn.Module):
    def __init__(self, width, groups, kernel_size):
        super().__init__()
        self.conv = _raster_conv("B", width, width, groups, kernel_size, kernel_size)
        self.proj = _raster_conv("B", width, width, groups, 1, 1)

    def forward(self, x):
        return x + self.proj(F.relu(self.conv(F.relu(x))))


class PixelCNN(nn.Module):
    """Type-A input convolution followed by type-B residual blocks."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        c, w = config.channel_count, config.hidden_width
        k0 = config.input_kernel
        self.levels = config.levels
        self.encode = InputEncoding(c, config.levels, config.embedding_dim)
        self.input = _raster_conv("A", self.encode.width, w, c, k0, k0)
        self.blocks = nn.ModuleList(
            ResidualBlock(w, c, config.kernel_size) for _ in range(config.block_count)
        )
        self.head = _OutputHead(w, c, config.levels)

    def forward(self, x):
        n, c, h, w = x.shape
        y = self.input(self.encode(x))
        for block in self.blocks:
            y = block(y)
        return self.head(y).view(n, c, self.levels, h, w)


class GatedBlock(nn.Module):
    """One vertical + horizontal gated layer.

    The vertical stack reads the current and all upper rows within its
    kernel and reaches the horizontal stack only after a one-row downward
    shift, so the horizontal stack sees complete rows above without a blind
    spot. The horizontal stack reads the current row up to the current pixel
    with channel-group masking.
    """

    def __init__(self, c_in, width, groups, kernel_size, first=False):
        super().__init__()
        k = kernel_size
        self.first = first
        self.k = k
        self.v_conv = nn.Conv2d(c_in, 2 * width, (k // 2 + 1, k))
        self.v_to_h = nn.Conv2d(2 * width, 2 * width, 1)
        self.h_conv = _raster_conv("A" if first else "B", c_in, width, groups, 1, k, repeat_out=2)
        self.h_out = _raster_conv("B", width, width, groups, 1, 1)

    def forward(self, v, h):
        p = self.k // 2
        v_pre = self.v_conv(F.pad(v, (p, p, p, 0)))
        v_shift = F.pad(v_pre, (0, 0, 1, 0))[:, :, :-1, :]
        h_pre = self.h_conv(h) + self.v_to_h(v_shift)
        h_new = self.h_out(_gate(h_pre))
        if not self.first:
            h_new = h + h_new
        return _gate(v_pre), h_new


class GatedPixelCNN(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        c, w = config.channel_count, config.hidden_width
        self.levels = config.levels
        self.encode = InputEncoding(c, config.levels, config.embedding_dim)
        layers = [GatedBlock(self.encode.width, w, c, config.input_kernel, first=True)]
        layers += [GatedBlock(w, w, c, config.kernel_size) for _ in range(config.block_count - 1)]
        self.blocks = nn.ModuleList(layers)
        self.head = _OutputHead(w, c, config.levels)

    def forward(self, x):
        n, c, h, w = x.shape
        v = hz = self.encode(x)
        for block in self.blocks:
            v, hz = block(v, hz)
        return self.head(hz).view(n, c, self.levels, h, w)


def build_network(config: ModelConfig) -> nn.Module:
    if config.family == "pixelcnn":
        return PixelCNN(config)
    return GatedPixelCNN(config)
