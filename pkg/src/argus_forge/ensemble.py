"""Ensemble information maps over (checkpoint, scan ordering) pairs.

Each member contributes ``I_k = -log p_k(x_i | x_<i)`` per pixel, computed in
its own scan ordering and mapped back to the original geometry. Members are
combined by averaging probabilities, not information:
``I = -log(mean_k exp(-I_k))``, evaluated as a log-mean-exp.
"""

from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image as PILImage
from scipy.special import logsumexp

from argus_forge.image import Image
from argus_forge.masked_models import ModelParameters, pixel_log_likelihood
from argus_forge.masked_models.checkpoint import dumps_json
from argus_forge.orderings import apply_transform, decode, invert_transform
from argus_forge.training import CheckpointStore, harvest_epochs

IMAP_MAGIC = b"IMAP"


def member_information_map(params: ModelParameters, ordering: int, image: Image) -> np.ndarray:
    """Per-pixel information (nats) of one member, in the original geometry."""
    decode(ordering)
    ll = pixel_log_likelihood(params, apply_transform(ordering, image))
    return invert_transform(ordering, -ll)


def combine_information(member_maps: Sequence[np.ndarray]) -> np.ndarray:
    """Average member probabilities and return the information of the average."""
    if len(member_maps) == 0:
        raise ValueError("need at least one member map")
    stack = np.stack([np.asarray(m, dtype=np.float64) for m in member_maps])
    out = math.log(len(member_maps)) - logsumexp(-stack, axis=0)
    return np.maximum(out, 0.0)


@dataclass(eq=False)
class EnsembleMember:
    params: ModelParameters
    ordering: int
    checkpoint: str | None = None

    def __post_init__(self):
        decode(self.ordering)


class EnsembleSpec:
    """Ordered list of ``(parameters, ordering)`` members sharing one config."""

    def __init__(self, members: Sequence[EnsembleMember]):
        members = list(members)
        if not members:
            raise ValueError("an ensemble needs at least one member")
        config = members[0].params.config
        if any(m.params.config != config for m in members):
            raise ValueError("all ensemble members must share one model config")
        self.members = members

    def __len__(self):
        return len(self.members)

    @property
    def config(self):
        return self.members[0].params.config

    def to_json(self) -> list[dict]:
        return [{"checkpoint": m.checkpoint, "ordering": int(m.ordering)} for m in self.members]

    def save(self, path: str | Path) -> None:
        if any(m.checkpoint is None for m in self.members):
            raise ValueError("members without a checkpoint file cannot be serialized")
        Path(path).write_bytes(dumps_json(self.to_json()))

    @classmethod
    def load(cls, path: str | Path, store: CheckpointStore) -> "EnsembleSpec":
        entries = json.loads(Path(path).read_text())
        return cls.from_entries(entries, store)

    @classmethod
    def from_entries(cls, entries: Sequence[dict], store: CheckpointStore) -> "EnsembleSpec":
        cache: dict[str, ModelParameters] = {}
        members = []
        for e in entries:
            name = e["checkpoint"]
            if name not in cache:
                cache[name] = store.load_file(name)
            members.append(EnsembleMember(cache[name], int(e["ordering"]), name))
        return cls(members)


def draw_orderings(k: int, seed: int) -> np.ndarray:
    """``k`` ordering ids drawn uniformly with a seeded generator."""
    return np.random.default_rng([seed, 3]).integers(0, 8, size=k)


def build_default_ensemble(
    store: CheckpointStore,
    k: int,
    seed: int = 0,
    first_epoch: int = 4,
    ordering: int | None = None,
) -> EnsembleSpec:
    """Harvest ``k`` checkpoints and draw one ordering uniformly per member.

    A fixed ``ordering`` overrides the random draw for every member.
    """
    epochs = harvest_epochs(store.epochs, k, first_epoch)
    draws = draw_orderings(k, seed)
    entries = [
        {"checkpoint": store.filename(e), "ordering": int(d if ordering is None else ordering)}
        for e, d in zip(epochs, draws)
    ]
    return EnsembleSpec.from_entries(entries, store)


def member_maps(spec: EnsembleSpec, image: Image, jobs: int = 1, cache: dict | None = None) -> list[np.ndarray]:
    """Member information maps in member order.

    ``cache`` (keyed by checkpoint name and ordering) lets several ensembles
    drawn from one store share work on the same image.
    """
    def one(m: EnsembleMember) -> np.ndarray:
        key = (m.checkpoint or id(m.params), m.ordering)
        if cache is not None and key in cache:
            return cache[key]
        out = member_information_map(m.params, m.ordering, image)
        if cache is not None:
            cache[key] = out
        return out

    if jobs <= 1:
        return [one(m) for m in spec.members]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, spec.members))


def ensemble_information_map(spec: EnsembleSpec, image: Image, jobs: int = 1, cache: dict | None = None) -> np.ndarray:
    """The ``H x W`` ensemble information map of ``image`` in nats."""
    return combine_information(member_maps(spec, image, jobs, cache))


def write_imap(path: str | Path, values: np.ndarray) -> None:
    """Write an information map: ``IMAP``, u32 H, u32 W, u32 0, then float32 rows."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("information maps are 2-D")
    h, w = values.shape
    header = IMAP_MAGIC + struct.pack("<III", h, w, 0)
    Path(path).write_bytes(header + values.astype("<f4").tobytes(order="C"))


def read_imap(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:4] != IMAP_MAGIC:
        raise ValueError(f"{path} is not an IMAP file")
    h, w, _ = struct.unpack("<III", blob[4:16])
    if len(blob) != 16 + 4 * h * w:
        raise ValueError(f"{path}: payload size does not match {h}x{w}")
    return np.frombuffer(blob[16:], dtype="<f4").reshape(h, w).astype(np.float64)


def write_heatmap_png(path: str | Path, values: np.ndarray) -> None:
    """Min-max normalized 8-bit grayscale rendering of a map."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    PILImage.fromarray(np.rint(scaled * 255).astype(np.uint8)).save(path, format="PNG")
