"""Integer raster images with a declared bit depth."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


class DimensionError(ValueError):
    """Raised when an image does not match the shape a model expects."""


@dataclass(frozen=True, eq=False)
class Image:
    """An H x W x C integer raster.

    ``pixels`` is stored as ``uint16`` regardless of the declared bit depth so
    that images of up to 16 bits share one code path.
    """

    pixels: np.ndarray
    bitdepth: int = 8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or min(px.shape) < 1:
            raise DimensionError(f"expected an H x W x C raster, got shape {px.shape}")
        if not 1 <= self.bitdepth <= 16:
            raise ValueError(f"bitdepth must be in [1, 16], got {self.bitdepth}")
        if not np.issubdtype(px.dtype, np.integer):
            if not np.all(px == np.round(px)):
                raise ValueError("pixel values must be integers")
        if px.size and (px.min() < 0 or px.max() > self.levels - 1):
            raise ValueError(
                f"pixel values must lie in [0, {self.levels - 1}] for bitdepth {self.bitdepth}"
            )
        px = np.ascontiguousarray(px, dtype=np.uint16)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def levels(self) -> int:
        """Alphabet size ``2 ** bitdepth``."""
        return 1 << self.bitdepth

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape

    def with_pixels(self, pixels: np.ndarray) -> "Image":
        return Image(pixels, self.bitdepth)

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.bitdepth == other.bitdepth and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        h, w, c = self.shape
        return f"Image({h}x{w}x{c}, bitdepth={self.bitdepth})"


def read_png(path: str | Path) -> Image:
    """Load an 8-bit grayscale or RGB PNG."""
    with PILImage.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    return Image(arr, 8)


def write_png(path: str | Path, image: Image) -> None:
    if image.bitdepth != 8 or image.channels not in (1, 3):
        raise ValueError("only 8-bit grayscale or RGB images can be written as PNG")
    arr = image.pixels.astype(np.uint8)
    if image.channels == 1:
        arr = arr[:, :, 0]
    PILImage.fromarray(arr).save(path, format="PNG")


def read_mask_png(path: str | Path) -> np.ndarray:
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr > 127


def write_mask_png(path: str | Path, mask: np.ndarray) -> None:
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    PILImage.fromarray(arr).save(path, format="PNG")
