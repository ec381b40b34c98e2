"""Command-line entry point: ``argus-forge <subcommand>``.

Option values resolve as built-in defaults, then ``--config`` (a JSON file
whose top-level keys apply to every subcommand and whose per-subcommand
sections override them), then explicit flags. Every run writes the resolved
options to ``run_config.json`` in its output directory.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from argus_forge.masked_models.checkpoint import dumps_json

SEED_ENV = "ARGUS_FORGE_SEED"

DEFAULTS = {
    "make-dataset": {
        "out": None, "seed": 0, "train_count": 32, "test_count": 100,
        "image_size": 64, "sizes": [4, 8, 16, 32],
    },
    "train": {
        "manifest": None, "out": None, "seed": 0, "family": "gated", "epochs": 60,
        "checkpoint_every": 2, "batch_size": 4, "crop_size": 64, "lr": 1e-3,
        "hidden_width": 60, "blocks": None,
    },
    "detect": {
        "store": None, "image": None, "manifest": None, "spec": None, "out": None,
        "seed": 0, "k": 8, "first_epoch": 4, "ordering": None, "threshold": None, "jobs": 1,
    },
    "evaluate": {
        "manifest": None, "maps": None, "store": None, "spec": None, "out": None,
        "seed": 0, "k": 8, "first_epoch": 4, "ordering": None, "jobs": 1,
        "label": "Generative Ensemble",
    },
}

REQUIRED = {
    "make-dataset": ["out"],
    "train": ["manifest", "out"],
    "detect": ["store", "out"],
    "evaluate": ["manifest", "out"],
}


def _add(p, *flags, **kw):
    p.add_argument(*flags, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argus-forge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset", help="synthesize the splicing dataset")
    _add(p, "--out", help="dataset directory")
    _add(p, "--train-count", type=int)
    _add(p, "--test-count", type=int)
    _add(p, "--image-size", type=int)
    _add(p, "--sizes", type=int, nargs="+")

    p = sub.add_parser("train", help="train a model and store checkpoints")
    _add(p, "--manifest", help="dataset manifest or directory")
    _add(p, "--out", help="checkpoint store directory")
    _add(p, "--family", choices=["pixelcnn", "gated"])
    _add(p, "--epochs", type=int)
    _add(p, "--checkpoint-every", type=int)
    _add(p, "--batch-size", type=int)
    _add(p, "--crop-size", type=int)
    _add(p, "--lr", type=float)
    _add(p, "--hidden-width", type=int)
    _add(p, "--blocks", type=int)

    for name, text in (("detect", "compute information maps"), ("evaluate", "P/R AUC per splice size")):
        p = sub.add_parser(name, help=text)
        _add(p, "--store", help="checkpoint store directory")
        _add(p, "--spec", help="ensemble JSON (overrides --k/--ordering)")
        _add(p, "--manifest", help="dataset manifest or directory")
        _add(p, "--out", help="output directory")
        _add(p, "--k", type=int)
        _add(p, "--first-epoch", type=int)
        _add(p, "--ordering", type=int, choices=range(8))
        _add(p, "--jobs", type=int)
        if name == "detect":
            _add(p, "--image", help="PNG image to analyse")
            _add(p, "--threshold", type=float)
        else:
            _add(p, "--maps", help="directory of <record id>.imap files from detect")
            _add(p, "--label")

    for p in sub.choices.values():
        _add(p, "--seed", type=int)
        _add(p, "--config", help="JSON file with option values")
    return parser


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    cmd = args.command
    opts = dict(DEFAULTS[cmd])
    if os.environ.get(SEED_ENV):
        opts["seed"] = int(os.environ[SEED_ENV])
    given = vars(args)
    if given.get("config"):
        try:
            cfg = json.loads(Path(given["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file: {exc}")
        section = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
        section.update(cfg.get(cmd, {}))
        for key, value in section.items():
            key = key.replace("-", "_")
            if key in opts:
                opts[key] = value
    for key, value in given.items():
        if key in opts:
            opts[key] = value
    missing = [k for k in REQUIRED[cmd] if opts.get(k) is None]
    if missing:
        parser.error(f"{cmd}: missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))
    if cmd == "detect" and (opts["image"] is None) == (opts["manifest"] is None):
        parser.error("detect: give exactly one of --image or --manifest")
    if cmd == "evaluate" and opts["maps"] is None and opts["store"] is None:
        parser.error("evaluate: give --maps or --store")
    return opts


def _echo(out: Path, cmd: str, opts: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_config.json").write_bytes(dumps_json({"command": cmd, "options": opts}))


def cmd_make_dataset(opts: dict) -> int:
    from argus_forge.dataset import DatasetConfig, build_dataset

    out = Path(opts["out"])
    config = DatasetConfig(opts["train_count"], opts["test_count"], opts["image_size"],
                           tuple(opts["sizes"]), opts["seed"])
    manifest = build_dataset(config, out)
    _echo(out, "make-dataset", opts)
    print(manifest.path)
    return 0


def cmd_train(opts: dict) -> int:
    from argus_forge.dataset import load_manifest
    from argus_forge.masked_models import ModelConfig
    from argus_forge.training import TrainConfig, train

    manifest = load_manifest(opts["manifest"])
    images = manifest.train_images()
    channels = images[0].channels
    model_config = ModelConfig(family=opts["family"], block_count=opts["blocks"],
                               hidden_width=opts["hidden_width"], channel_count=channels)
    train_config = TrainConfig(learning_rate=opts["lr"], epochs=opts["epochs"],
                               checkpoint_every=opts["checkpoint_every"], batch_size=opts["batch_size"],
                               crop_size=opts["crop_size"], seed=opts["seed"])
    out = Path(opts["out"])
    store = train(train_config, images, model_config, out)
    _echo(out, "train", opts)
    print(f"checkpoints: {len(store)}  final loss: {store.loss_history[-1]:.4f} nats/pixel")
    return 0


def _ensemble(opts: dict):
    from argus_forge.ensemble import EnsembleSpec, build_default_ensemble
    from argus_forge.training import CheckpointStore

    store = CheckpointStore(opts["store"])
    if opts.get("spec"):
        return EnsembleSpec.load(opts["spec"], store)
    return build_default_ensemble(store, opts["k"], opts["seed"], opts["first_epoch"], opts["ordering"])


def cmd_detect(opts: dict) -> int:
    import numpy as np

    from argus_forge.dataset import load_manifest
    from argus_forge.ensemble import ensemble_information_map, write_heatmap_png, write_imap
    from argus_forge.evaluation import detect
    from argus_forge.image import read_png, write_mask_png

    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    spec = _ensemble(opts)
    spec.save(out / "ensemble.json")
    if opts["image"]:
        jobs = [(Path(opts["image"]).stem, read_png(opts["image"]))]
    else:
        manifest = load_manifest(opts["manifest"])
        jobs = [(e["id"], manifest.load_image(e)) for e in manifest.test]
    for name, image in jobs:
        info = ensemble_information_map(spec, image, opts["jobs"])
        write_imap(out / f"{name}.imap", info)
        write_heatmap_png(out / f"{name}_heatmap.png", info)
        if opts["threshold"] is not None:
            write_mask_png(out / f"{name}_mask.png", detect(info, opts["threshold"]))
        print(f"{name}: max {float(np.max(info)):.3f} nats, mean {float(np.mean(info)):.3f} nats")
    _echo(out, "detect", opts)
    return 0


def cmd_evaluate(opts: dict) -> int:
    from argus_forge.dataset import load_manifest
    from argus_forge.ensemble import read_imap
    from argus_forge.evaluation import ensemble_map_fn, evaluate_by_size

    manifest = load_manifest(opts["manifest"])
    if opts["maps"]:
        maps_dir = Path(opts["maps"])
        map_fn = lambda entry, image: read_imap(maps_dir / f"{entry['id']}.imap")
    else:
        map_fn = ensemble_map_fn(_ensemble(opts), opts["jobs"])
    report = evaluate_by_size(manifest, map_fn, label=opts["label"])
    out = Path(opts["out"])
    report.write(out)
    _echo(out, "evaluate", opts)
    print(report.to_table(), end="")
    return 0


COMMANDS = {
    "make-dataset": cmd_make_dataset,
    "train": cmd_train,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    opts = resolve(args, parser)
    try:
        return COMMANDS[args.command](opts)
    except Exception as exc:  # noqa: BLE001 - reported as exit code 1
        print(f"argus-forge {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
