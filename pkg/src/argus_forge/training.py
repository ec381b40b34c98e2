"""Training on pristine images and checkpoint harvesting.

Every ``checkpoint_every`` epochs the current weights are written to a
:class:`CheckpointStore`; later a subset of those snapshots is harvested as
ensemble members.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from argus_forge.image import Image
from argus_forge.masked_models import (
    ModelConfig,
    ModelParameters,
    build_network,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)
from argus_forge.masked_models.checkpoint import dumps_json
from argus_forge.masked_models.likelihood import to_tensor
from argus_forge.orderings import apply_transform

logger = logging.getLogger(__name__)

INDEX_NAME = "index.json"


class TrainingDiverged(RuntimeError):
    pass


class InsufficientCheckpoints(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 60
    checkpoint_every: int = 2
    batch_size: int = 4
    crop_size: int = 64
    seed: int = 0
    augment: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1 or self.crop_size < 1:
            raise ValueError("epochs, batch_size and crop_size must be >= 1")
        if not 1 <= self.checkpoint_every <= self.epochs:
            raise ValueError("checkpoint_every must be in [1, epochs]")

    @classmethod
    def paper(cls, **overrides) -> "TrainConfig":
        """The long schedule: 1000 epochs with a snapshot every 20."""
        return cls(**{"epochs": 1000, "checkpoint_every": 20, **overrides})


class CheckpointStore:
    """A directory of checkpoint files plus ``index.json``.

    The index maps epoch tags to file names and records the model config,
    the training config and the per-epoch mean training loss.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        index_path = self.root / INDEX_NAME
        if not index_path.is_file():
            raise FileNotFoundError(f"no checkpoint index at {index_path}")
        self.index = json.loads(index_path.read_text())
        self.config = ModelConfig.from_dict(self.index["config"])

    @classmethod
    def create(cls, root, config: ModelConfig, train_config: TrainConfig | None = None):
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        index = {
            "version": 1,
            "config": config.to_dict(),
            "seed": train_config.seed if train_config else None,
            "train_config": asdict(train_config) if train_config else None,
            "checkpoints": {},
            "loss_history": [],
        }
        (root / INDEX_NAME).write_bytes(dumps_json(index))
        return cls(root)

    def _flush(self):
        (self.root / INDEX_NAME).write_bytes(dumps_json(self.index))

    def add(self, params: ModelParameters) -> Path:
        name = f"epoch_{params.epoch_tag:05d}.afck"
        path = save_checkpoint(params, self.root / name)
        self.index["checkpoints"][str(params.epoch_tag)] = name
        self._flush()
        return path

    def set_history(self, losses: Sequence[float]):
        self.index["loss_history"] = [float(v) for v in losses]
        self._flush()

    @property
    def epochs(self) -> list[int]:
        return sorted(int(k) for k in self.index["checkpoints"])

    @property
    def loss_history(self) -> list[float]:
        return list(self.index.get("loss_history", []))

    def filename(self, epoch: int) -> str:
        return self.index["checkpoints"][str(epoch)]

    def load(self, epoch: int) -> ModelParameters:
        return load_checkpoint(self.root / self.filename(epoch))

    def load_file(self, filename: str) -> ModelParameters:
        return load_checkpoint(self.root / filename)

    def __len__(self):
        return len(self.index["checkpoints"])


def random_crop(image: Image, size: int, rng: np.random.Generator) -> np.ndarray:
    h, w = image.height, image.width
    if h < size or w < size:
        raise ValueError(f"image {h}x{w} is smaller than crop size {size}")
    r = int(rng.integers(0, h - size + 1))
    c = int(rng.integers(0, w - size + 1))
    return image.pixels[r : r + size, c : c + size]


def augment(pixels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random quarter-turn rotation and horizontal flip."""
    return apply_transform(int(rng.integers(0, 8)), pixels)


def batch_loss(net, x: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel negative log-likelihood (nats, summed over channels)."""
    logits = net(x)
    n, c, v, h, w = logits.shape
    nll = F.cross_entropy(logits.transpose(1, 2), x, reduction="sum")
    return nll / (n * h * w)


def _check_training_set(images: Sequence[Image], config: ModelConfig):
    if len(images) == 0:
        raise ValueError("training set is empty")
    for im in images:
        if im.channels != config.channel_count or im.bitdepth != config.bitdepth:
            raise ValueError("training images must share the model's channel count and bitdepth")


def train(
    config: TrainConfig,
    data: Sequence[Image],
    model_config: ModelConfig,
    store_dir: str | Path,
) -> CheckpointStore:
    """Fit ``model_config`` to ``data`` with Adam and write snapshots to ``store_dir``.

    One epoch visits every image once in a seeded random order, taking one
    random crop per image. A non-finite loss raises :class:`TrainingDiverged`.
    """
    _check_training_set(data, model_config)
    crop = min(config.crop_size, min(im.height for im in data), min(im.width for im in data))
    rng = np.random.default_rng([config.seed, 1])

    params = init_parameters(model_config, config.seed)
    net = build_network(model_config)
    net.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in params.weights.items()}, strict=False)
    net.train()
    opt = torch.optim.Adam(
        net.parameters(),
        lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
        eps=config.eps,
        foreach=False,
    )
    store = CheckpointStore.create(store_dir, model_config, config)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(data))
        losses = []
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            crops = []
            for idx in order[start : start + config.batch_size]:
                px = random_crop(data[idx], crop, rng)
                if config.augment:
                    px = augment(px, rng)
                crops.append(Image(px, model_config.bitdepth))
            loss = batch_loss(net, to_tensor(crops))
            value = float(loss.detach())
            if not math.isfinite(value):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch {b}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(value)
        history.append(float(np.mean(losses)))
        logger.info("epoch %d loss %.4f", epoch, history[-1])
        done = epoch + 1
        if done % config.checkpoint_every == 0:
            store.add(ModelParameters.from_module(net, model_config, epoch_tag=done))
    store.set_history(history)
    return store


def harvest_checkpoints(store: CheckpointStore, count: int, first_epoch: int = 0) -> list[ModelParameters]:
    """Pick ``count`` snapshots spread uniformly from ``first_epoch`` to the last one.

    Targets are evenly spaced between the first eligible and the last
    snapshot (just the last one when ``count == 1``); each target
    snaps to the nearest stored epoch (later one on ties). When targets are
    closer together than the stored grid, a snapshot can be picked twice.
    """
    return [store.load(e) for e in harvest_epochs(store.epochs, count, first_epoch)]


def harvest_epochs(available: Sequence[int], count: int, first_epoch: int = 0) -> list[int]:
    if count < 1:
        raise ValueError("count must be >= 1")
    grid = np.array(sorted(e for e in available if e >= first_epoch))
    if grid.size == 0:
        raise InsufficientCheckpoints(
            f"no checkpoints at or after epoch {first_epoch} ({len(available)} stored in total)"
        )
    if grid.size < count and count > 2 * grid.size:
        raise InsufficientCheckpoints(
            f"requested {count} checkpoints but only {grid.size} are available "
            f"at or after epoch {first_epoch}"
        )
    targets = np.linspace(grid[-1], grid[0], count)[::-1]
    picked = []
    for t in targets:
        d = np.abs(grid - t)
        picked.append(int(grid[np.flatnonzero(d == d.min())[-1]]))
    return picked
