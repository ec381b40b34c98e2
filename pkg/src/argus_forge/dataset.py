"""Synthetic splicing dataset with exact ground-truth masks.

Host images are smooth multi-octave noise fields with low-frequency colour
variation and mild sensor noise. Spliced objects come from a different
family: geometric and plume-like silhouettes filled with high-frequency,
saturated textures, pasted opaquely. A dataset directory holds PNG images,
PNG masks (0/255) and ``manifest.json``; any directory following the same
manifest schema can be evaluated, which is how real imagery is ingested.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
from scipy import ndimage

from argus_forge.image import Image, read_mask_png, read_png, write_mask_png, write_png
from argus_forge.masked_models.checkpoint import dumps_json

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

SHAPES = ("square", "disc", "cross", "ring", "plume", "diamond", "triangle")
TEXTURES = ("speckle", "stripes", "checker")
PALETTE = (
    (230, 40, 40), (40, 200, 60), (50, 80, 235), (240, 230, 60), (235, 60, 220),
    (40, 225, 230), (250, 250, 250), (20, 20, 20), (250, 140, 20),
)
N_OBJECTS = 19


class PlacementError(ValueError):
    pass


def object_catalogue(index: int) -> tuple[str, str, tuple[int, int, int]]:
    """``(shape, texture, colour)`` of object ``index`` in ``[0, 18]``."""
    if not 0 <= index < N_OBJECTS:
        raise ValueError(f"object_id must be in [0, {N_OBJECTS - 1}], got {index}")
    return (
        SHAPES[index % len(SHAPES)],
        TEXTURES[index % len(TEXTURES)],
        PALETTE[(index * 4) % len(PALETTE)],
    )


def _smooth_field(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    coarse = rng.standard_normal((cells + 3, cells + 3))
    fine = ndimage.zoom(coarse, (size + 3 * size / cells) / (cells + 3), order=3)
    off = int(round(1.5 * size / cells))
    return fine[off : off + size, off : off + size]


def generate_base_images(count: int, size: int = 64, texture_seed: int = 0) -> list[Image]:
    """Procedural host images; image ``k`` depends only on ``(texture_seed, k)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    for k in range(count):
        rng = np.random.default_rng([texture_seed, k])
        lum = np.zeros((size, size))
        amp = 1.0
        for cells in (2, 4, 8, 16):
            cells = min(cells, size)
            lum += amp * _smooth_field(rng, size, cells)
            amp *= 0.5
        lum /= lum.std() + 1e-9
        tint = np.stack([_smooth_field(rng, size, 2) for _ in range(3)], axis=-1)
        base = rng.uniform(90, 150, size=3)
        spread = rng.uniform(14, 24)
        px = base + spread * lum[..., None] + 10.0 * tint
        px += rng.normal(0.0, 1.5, px.shape)
        out.append(Image(np.clip(np.rint(px), 0, 255).astype(np.uint8)))
    return out


def _silhouette(shape: str, size: int, rng: np.random.Generator) -> np.ndarray:
    t = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    v, u = np.meshgrid(t, t, indexing="ij")
    r = np.hypot(u, v)
    if shape == "square":
        m = np.ones((size, size), bool)
    elif shape == "disc":
        m = r <= 1.0
    elif shape == "cross":
        m = (np.abs(u) <= 0.35) | (np.abs(v) <= 0.35)
    elif shape == "ring":
        m = (r >= 0.45) & (r <= 1.0)
    elif shape == "plume":
        wobble = _smooth_field(rng, size, 2) if size >= 2 else np.zeros((size, size))
        m = r + 0.3 * wobble <= 0.9
    elif shape == "diamond":
        m = np.abs(u) + np.abs(v) <= 1.0
    else:
        m = np.abs(u) <= (v + 1.0) / 2.0
    m[(size - 1) // 2, (size - 1) // 2] = True
    return m


def _texture(kind: str, colour, size: int, rng: np.random.Generator) -> np.ndarray:
    colour = np.asarray(colour, dtype=float)
    if kind == "speckle":
        tex = colour + rng.normal(0.0, 45.0, (size, size, 3))
    else:
        rows, cols = np.indices((size, size))
        period = int(rng.integers(1, 3))
        if kind == "stripes":
            on = ((rows + cols) // period) % 2 == 0
        else:
            on = ((rows // period) + (cols // period)) % 2 == 0
        tex = np.where(on[..., None], colour, 255.0 - colour)
        tex = tex + rng.normal(0.0, 20.0, tex.shape)
    return np.clip(np.rint(tex), 0, 255)


def render_object(object_id: int, size: int, rotation_deg: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Rotated object patch ``(pixels, support)`` with nearest-neighbour resampling."""
    shape, kind, colour = object_catalogue(object_id)
    rng = np.random.default_rng([seed, object_id, size])
    support = _silhouette(shape, size, rng)
    tex = _texture(kind, colour, size, rng)
    stack = np.concatenate([tex, support[..., None].astype(float)], axis=-1)
    if rotation_deg % 360:
        stack = ndimage.rotate(stack, rotation_deg, axes=(1, 0), reshape=True, order=0, mode="constant", cval=0.0)
    support = stack[..., 3] > 0.5
    return stack[..., :3].astype(np.uint8), support


@dataclass(eq=False)
class SpliceRecord:
    image: Image
    mask: np.ndarray
    object_size: int | None = None
    object_id: int | None = None
    rotation_deg: float | None = None
    location: tuple[int, int] | None = None


def splice(
    base: Image,
    object_id: int | None,
    size: int | None = None,
    rotation_deg: float = 0.0,
    location: tuple[int, int] = (0, 0),
    seed: int = 0,
) -> SpliceRecord:
    """Paste object ``object_id`` with its rotated top-left corner at ``location``.

    ``object_id=None`` returns the base image with an all-zero mask.
    """
    if object_id is None:
        return SpliceRecord(base, np.zeros((base.height, base.width), bool))
    if base.channels != 3 or base.bitdepth != 8:
        raise ValueError("splicing needs an 8-bit RGB host image")
    patch, support = render_object(object_id, size, rotation_deg, seed)
    r0, c0 = location
    ph, pw = support.shape
    if r0 < 0 or c0 < 0 or r0 + ph > base.height or c0 + pw > base.width:
        raise PlacementError(
            f"rotated object of extent {ph}x{pw} at {location} does not fit a "
            f"{base.height}x{base.width} image"
        )
    px = base.pixels.copy()
    mask = np.zeros((base.height, base.width), bool)
    window = px[r0 : r0 + ph, c0 : c0 + pw]
    window[support] = patch[support]
    mask[r0 : r0 + ph, c0 : c0 + pw] = support
    return SpliceRecord(base.with_pixels(px), mask, size, object_id, float(rotation_deg), (int(r0), int(c0)))


@dataclass(frozen=True)
class DatasetConfig:
    train_count: int = 32
    test_count: int = 100
    image_size: int = 64
    sizes: tuple[int, ...] = (4, 8, 16, 32)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if self.train_count < 1 or self.test_count < 0:
            raise ValueError("need at least one training image")
        if not self.sizes and self.test_count:
            raise ValueError("sizes must be non-empty when test_count > 0")
        for s in self.sizes:
            if s < 1 or s * 1.5 > self.image_size:
                raise ValueError(f"object size {s} does not fit rotated in {self.image_size}px images")

    @classmethod
    def paper(cls, seed: int = 0) -> "DatasetConfig":
        """Counts and sizes of the 1000x1000 satellite benchmark."""
        return cls(98, 500, 1000, (16, 32, 64, 128, 256), seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        return d


@dataclass
class DatasetManifest:
    root: Path
    seed: int
    config: dict
    train: list[dict] = field(default_factory=list)
    test: list[dict] = field(default_factory=list)

    @property
    def path(self) -> Path:
        return self.root / MANIFEST_NAME

    def to_dict(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "seed": self.seed,
            "config": self.config,
            "splits": {"train": self.train, "test": self.test},
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps_json(self.to_dict())).hexdigest()

    def load_image(self, entry: dict) -> Image:
        return read_png(self.root / entry["image"])

    def load_mask(self, entry: dict) -> np.ndarray:
        if entry.get("mask") is None:
            im = self.load_image(entry)
            return np.zeros((im.height, im.width), bool)
        return read_mask_png(self.root / entry["mask"])

    def train_images(self) -> list[Image]:
        return [self.load_image(e) for e in self.train]

    def sizes(self) -> list[int]:
        declared = self.config.get("sizes") or []
        seen = {e["object_size"] for e in self.test if e.get("object_size") is not None}
        return sorted(set(declared) | seen)


_ENTRY_SCHEMA = {
    "type": "object",
    "required": ["id", "image", "mask", "object_size"],
    "properties": {
        "id": {"type": "string"},
        "image": {"type": "string"},
        "mask": {"type": ["string", "null"]},
        "object_size": {"type": ["integer", "null"]},
        "object_id": {"type": ["integer", "null"]},
        "rotation_deg": {"type": ["number", "null"]},
        "location": {"type": ["array", "null"], "items": {"type": "integer"}},
    },
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["version", "seed", "splits"],
    "properties": {
        "version": {"const": MANIFEST_VERSION},
        "seed": {"type": ["integer", "null"]},
        "config": {"type": "object"},
        "splits": {
            "type": "object",
            "properties": {
                "train": {"type": "array", "items": _ENTRY_SCHEMA},
                "test": {"type": "array", "items": _ENTRY_SCHEMA},
            },
        },
    },
}


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read and validate a manifest (or a directory containing one)."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    data = json.loads(path.read_text())
    jsonschema.validate(data, MANIFEST_SCHEMA)
    splits = data["splits"]
    for e in splits.get("train", []):
        if e.get("object_id") is not None or e.get("object_size") is not None:
            raise ValueError(f"train record {e['id']} is not pristine")
    manifest = DatasetManifest(path.parent, data["seed"], data.get("config", {}),
                               splits.get("train", []), splits.get("test", []))
    for e in manifest.train + manifest.test:
        for key in ("image", "mask"):
            if e.get(key) is not None and not (manifest.root / e[key]).is_file():
                raise FileNotFoundError(f"{key} file {e[key]} of record {e['id']} is missing")
    return manifest


def build_dataset(config: DatasetConfig, out_dir: str | Path) -> DatasetManifest:
    """Generate images and masks under ``out_dir`` and write the manifest."""
    root = Path(out_dir)
    try:
        (root / "train").mkdir(parents=True, exist_ok=True)
        (root / "test").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot write dataset to {root}: {exc}") from exc
    train_seed, test_seed = 2 * config.seed, 2 * config.seed + 1
    manifest = DatasetManifest(root, config.seed, config.to_dict())

    for k, im in enumerate(generate_base_images(config.train_count, config.image_size, train_seed)):
        name = f"train/img_{k:04d}.png"
        write_png(root / name, im)
        manifest.train.append({"id": f"train-{k:04d}", "image": name, "mask": None,
                               "object_size": None, "object_id": None,
                               "rotation_deg": None, "location": None})

    if config.test_count:
        hosts = generate_base_images(config.test_count, config.image_size, test_seed)
        for k, host in enumerate(hosts):
            rng = np.random.default_rng([config.seed, 7, k])
            size = config.sizes[k % len(config.sizes)]
            object_id = int(rng.integers(0, N_OBJECTS))
            rotation = int(rng.integers(0, 360))
            _, support = render_object(object_id, size, rotation, seed=k)
            ph, pw = support.shape
            loc = (int(rng.integers(0, config.image_size - ph + 1)),
                   int(rng.integers(0, config.image_size - pw + 1)))
            rec = splice(host, object_id, size, rotation, loc, seed=k)
            img_name, mask_name = f"test/img_{k:04d}.png", f"test/mask_{k:04d}.png"
            write_png(root / img_name, rec.image)
            write_mask_png(root / mask_name, rec.mask)
            manifest.test.append({"id": f"test-{k:04d}", "image": img_name, "mask": mask_name,
                                  "object_size": size, "object_id": object_id,
                                  "rotation_deg": rotation, "location": list(loc)})
    manifest.path.write_bytes(dumps_json(manifest.to_dict()))
    return manifest
