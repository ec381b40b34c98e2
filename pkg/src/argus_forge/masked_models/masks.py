"""Raster-scan causal kernel masks with channel-group wiring.

A kernel of shape ``(out, in, kh, kw)`` is split into channel groups, one
group per image channel. Spatial taps that read strictly earlier raster
positions are always open. The center tap connects an input group to an
output group only when the input group comes strictly earlier (type A) or
not later (type B)::

    type A, 3x3, one group      type B, 3x3, one group
        1 1 1                       1 1 1
        1 0 0                       1 1 0
        0 0 0                       0 0 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidMaskSpec(ValueError):
    pass


def channel_groups(n_channels: int, n_groups: int) -> np.ndarray:
    """Group index of each of ``n_channels`` contiguous channels."""
    return np.arange(n_channels) * n_groups // n_channels


@dataclass(frozen=True)
class MaskSpec:
    mask_type: str
    kernel_height: int
    kernel_width: int
    in_groups: int = 1
    out_groups: int = 1
    in_channels: int | None = None
    out_channels: int | None = None

    def __post_init__(self):
        if self.mask_type not in ("A", "B"):
            raise InvalidMaskSpec(f"mask_type must be 'A' or 'B', got {self.mask_type!r}")
        for name in ("kernel_height", "kernel_width"):
            k = getattr(self, name)
            if k < 1 or k % 2 == 0:
                raise InvalidMaskSpec(f"{name} must be a positive odd integer, got {k}")
        if self.in_groups < 1 or self.out_groups < 1:
            raise InvalidMaskSpec("group counts must be >= 1")
        if self.n_in < self.in_groups or self.n_out < self.out_groups:
            raise InvalidMaskSpec("need at least one channel per group")

    @property
    def n_in(self) -> int:
        return self.in_groups if self.in_channels is None else self.in_channels

    @property
    def n_out(self) -> int:
        return self.out_groups if self.out_channels is None else self.out_channels


def build_mask(spec: MaskSpec) -> np.ndarray:
    """Binary ``(out, in, kh, kw)`` float32 mask for ``spec``."""
    kh, kw = spec.kernel_height, spec.kernel_width
    ch, cw = kh // 2, kw // 2
    mask = np.zeros((spec.n_out, spec.n_in, kh, kw), dtype=np.float32)
    mask[:, :, :ch, :] = 1.0
    mask[:, :, ch, :cw] = 1.0
    g_out = channel_groups(spec.n_out, spec.out_groups)[:, None]
    g_in = channel_groups(spec.n_in, spec.in_groups)[None, :]
    if spec.mask_type == "A":
        center = g_out > g_in
    else:
        center = g_out >= g_in
    mask[:, :, ch, cw] = center
    return mask


def masked_conv2d(x: np.ndarray, weight: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Zero-padded float64 cross-correlation of an ``H x W x C_in`` array.

    ``weight`` has shape ``(out, in, kh, kw)``; the result is ``H x W x C_out``.
    """
    import torch
    import torch.nn.functional as F

    w = np.asarray(weight, dtype=np.float64)
    if mask is not None:
        w = w * mask
    kh, kw = w.shape[-2:]
    xt = torch.from_numpy(np.ascontiguousarray(np.moveaxis(np.asarray(x, np.float64), -1, 0)))[None]
    y = F.conv2d(xt, torch.from_numpy(np.ascontiguousarray(w)), padding=(kh // 2, kw // 2))
    return np.moveaxis(y[0].numpy(), 0, -1)
