"""Single-file checkpoint format.

Layout: the 4-byte magic ``AFCK``, a little-endian ``u32`` manifest length,
the manifest as UTF-8 JSON, then every array as raw little-endian float32
in manifest order. Offsets in the manifest are relative to the end of the
manifest.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from argus_forge.masked_models.likelihood import ModelParameters
from argus_forge.masked_models.networks import ModelConfig

MAGIC = b"AFCK"
FORMAT_VERSION = 1


class CheckpointFormatError(ValueError):
    pass


def dumps_json(obj) -> bytes:
    """Canonical JSON bytes: sorted keys, fixed separators, trailing newline."""
    return (json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": ")) + "\n").encode()


def checkpoint_bytes(params: ModelParameters) -> bytes:
    index = []
    chunks = []
    offset = 0
    for name, arr in params.weights.items():
        raw = arr.astype("<f4").tobytes(order="C")
        index.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    manifest = {
        "version": FORMAT_VERSION,
        "config": params.config.to_dict(),
        "epoch_tag": int(params.epoch_tag),
        "arrays": index,
    }
    head = dumps_json(manifest)
    return MAGIC + struct.pack("<I", len(head)) + head + b"".join(chunks)


def save_checkpoint(params: ModelParameters, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(checkpoint_bytes(params))
    return path


def parse_checkpoint(blob: bytes) -> ModelParameters:
    if blob[:4] != MAGIC or len(blob) < 8:
        raise CheckpointFormatError("not a checkpoint file (bad magic)")
    (n,) = struct.unpack("<I", blob[4:8])
    try:
        manifest = json.loads(blob[8 : 8 + n].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"corrupt checkpoint manifest: {exc}") from exc
    if manifest.get("version") != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {manifest.get('version')}")
    data = memoryview(blob)[8 + n :]
    weights = {}
    for entry in manifest["arrays"]:
        start, size = entry["offset"], entry["nbytes"]
        if start + size > len(data):
            raise CheckpointFormatError(f"array {entry['name']!r} is truncated")
        arr = np.frombuffer(data[start : start + size], dtype="<f4").reshape(entry["shape"])
        weights[entry["name"]] = arr.astype(np.float32)
    config = ModelConfig.from_dict(manifest["config"])
    return ModelParameters(config, weights, manifest["epoch_tag"])


def load_checkpoint(path: str | Path) -> ModelParameters:
    return parse_checkpoint(Path(path).read_bytes())
