"""The eight dihedral scan orderings.

An ordering id encodes ``4 * hflip + rotation_index``. Applying ordering
``(r, f)`` to a grid flips it horizontally when ``f`` is set and then
rotates it ``r`` quarter turns counter-clockwise. Running a raster-order
model on the transformed image is the same as running the model with the
correspondingly transformed masks on the original image.
"""

from __future__ import annotations

import numpy as np

from argus_forge.image import Image

ORDERINGS = tuple(range(8))
IDENTITY = 0


def decode(ordering: int) -> tuple[int, bool]:
    """``(rotation_index, hflip)`` of an ordering id."""
    o = int(ordering)
    if not 0 <= o < 8:
        raise ValueError(f"ordering id must be in [0, 7], got {ordering}")
    return o % 4, o >= 4


def encode(rotation: int, hflip: bool) -> int:
    return 4 * int(bool(hflip)) + rotation % 4


def compose(a: int, b: int) -> int:
    """Id of ``a`` after ``b``: ``apply(compose(a, b), x) == apply(a, apply(b, x))``."""
    ra, fa = decode(a)
    rb, fb = decode(b)
    r = ra - rb if fa else ra + rb
    return encode(r, fa != fb)


def inverse(ordering: int) -> int:
    r, f = decode(ordering)
    return ordering if f else encode(-r, False)


def _forward(arr: np.ndarray, ordering: int, axes: tuple[int, int]) -> np.ndarray:
    r, f = decode(ordering)
    if f:
        arr = np.flip(arr, axis=axes[1])
    return np.ascontiguousarray(np.rot90(arr, k=r, axes=axes))


def _backward(arr: np.ndarray, ordering: int, axes: tuple[int, int]) -> np.ndarray:
    r, f = decode(ordering)
    arr = np.rot90(arr, k=-r, axes=axes)
    if f:
        arr = np.flip(arr, axis=axes[1])
    return np.ascontiguousarray(arr)


def apply_transform(ordering: int, image):
    """Permute the pixels of an image (or an H x W[ x ...] array)."""
    if isinstance(image, Image):
        return image.with_pixels(_forward(image.pixels, ordering, (0, 1)))
    return _forward(np.asarray(image), ordering, (0, 1))


def invert_transform(ordering: int, grid):
    """Undo :func:`apply_transform` on an image or array."""
    if isinstance(grid, Image):
        return grid.with_pixels(_backward(grid.pixels, ordering, (0, 1)))
    return _backward(np.asarray(grid), ordering, (0, 1))


def transform_mask(ordering: int, mask: np.ndarray) -> np.ndarray:
    """Rotate/flip a kernel (or mask) over its last two axes."""
    mask = np.asarray(mask)
    return _forward(mask, ordering, (mask.ndim - 2, mask.ndim - 1))
